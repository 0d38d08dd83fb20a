#include "tracestyles/error.hpp"
#include "tracestyles/pctl.hpp"

#include <json.hpp>

namespace tracestyles {

Grouping Grouping::parse(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed grouping JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  if (!j.is_object()) throw ParseError("grouping must be a JSON object of label arrays", 0);
  Grouping g;
  for (const auto& [name, labels] : j.items()) {
    if (!labels.is_array()) throw ParseError("group '" + name + "' must be an array of labels", 0);
    for (const auto& label : labels) {
      if (!label.is_string()) throw ParseError("group '" + name + "' has a non-string label", 0);
      g.groups[name].push_back(label.get<std::string>());
    }
  }
  return g;
}

namespace {

/// Atoms and rewards over states that carry an observed label `label_of(s)`.
template <class LabelOf>
Labelling label_atoms(const Vocabulary& vocab, std::size_t states, LabelOf label_of,
                      const Grouping& grouping) {
  Labelling out;
  const std::size_t n = vocab.size();
  std::vector<StateSet> by_label(n, StateSet(states));
  for (std::size_t s = 0; s < states; ++s) by_label[label_of(s)].insert(s);
  for (std::size_t y = 0; y < n; ++y) {
    out.atoms["y=" + vocab.label(y)] = by_label[y];
    Vector r = Vector::Zero(states);
    for (auto s : by_label[y].members()) r[s] = 1.0;
    out.rewards["rState" + vocab.label(y)] = std::move(r);
  }
  out.rewards["rSteps"] = Vector::Ones(states);
  for (const auto& [name, labels] : grouping.groups) {
    StateSet set(states);
    for (const auto& label : labels) {
      const auto y = vocab.find(label);
      if (!y) throw ArgumentError("group '" + name + "' names unknown label '" + label + "'");
      set = set | by_label[*y];
    }
    out.atoms["group=" + name] = std::move(set);
  }
  return out;
}

}  // namespace

Labelling atoms_for(const ActivityPatternDtmc& pattern, const Grouping& grouping) {
  return label_atoms(pattern.states, pattern.states.size(), [](std::size_t s) { return s; },
                     grouping);
}

Labelling atoms_for(const ProductChain& chain, const Grouping& grouping) {
  const std::size_t n = chain.vocab.size();
  const std::size_t m = chain.components * n;
  Labelling out = label_atoms(chain.vocab, m, [n](std::size_t s) { return s % n; }, grouping);
  for (std::size_t x = 0; x < chain.components; ++x) {
    StateSet set(m);
    for (std::size_t y = 0; y < n; ++y) set.insert(chain.index(x, y));
    out.atoms["x=" + std::to_string(x)] = std::move(set);
  }
  return out;
}

Dtmc to_dtmc(const ActivityPatternDtmc& pattern, const Grouping& grouping) {
  Vector init = Vector::Zero(pattern.states.size());
  init[pattern.initial] = 1.0;
  return Dtmc(pattern.P, std::move(init), atoms_for(pattern, grouping));
}

Dtmc to_dtmc(const ProductChain& chain, const Grouping& grouping) {
  return Dtmc(chain.P, chain.init, atoms_for(chain, grouping));
}

}  // namespace tracestyles
