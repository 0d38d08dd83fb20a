#include "tracestyles/trace.hpp"

#include "tracestyles/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_map>

namespace tracestyles {

using nlohmann::json;

Vocabulary::Vocabulary(std::vector<std::string> labels) {
  labels_.emplace_back(kStartLabel);
  labels_.emplace_back(kStopLabel);
  for (auto& l : labels) {
    if (l.empty()) throw ArgumentError("vocabulary label must be non-empty");
    if (l == kStartLabel || l == kStopLabel) continue;
    labels_.push_back(std::move(l));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second)
      throw ArgumentError("duplicate vocabulary label '" + labels_[i] + "'");
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Vocabulary::index(std::string_view label) const {
  auto found = find(label);
  if (!found) throw ArgumentError("unknown label '" + std::string(label) + "'");
  return *found;
}

std::int64_t UserTrace::anchor() const {
  if (origin) return *origin;
  return sessions.empty() ? 0 : sessions.front().start_time();
}

std::size_t UserTrace::event_count() const {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.events.size();
  return n;
}

TimeInterval::TimeInterval(std::int64_t first_day, std::int64_t end_day)
    : t1(first_day), t2(end_day) {
  if (t1 < 0 || t2 <= t1)
    throw ArgumentError("invalid time interval [" + std::to_string(t1) + "," +
                        std::to_string(t2) + ")");
}

TimeInterval TimeInterval::parse(std::string_view text) {
  auto sep = text.find_first_of(":-", 1);
  auto bad = [&] { return ArgumentError("invalid interval '" + std::string(text) + "'"); };
  if (sep == std::string_view::npos) throw bad();
  std::int64_t a = 0, b = 0;
  auto lhs = text.substr(0, sep), rhs = text.substr(sep + 1);
  auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), a);
  auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), b);
  if (r1.ec != std::errc{} || r1.ptr != lhs.data() + lhs.size() || r2.ec != std::errc{} ||
      r2.ptr != rhs.data() + rhs.size())
    throw bad();
  return TimeInterval(a, b);
}

std::string TimeInterval::name() const {
  return std::to_string(t1) + "-" + std::to_string(t2);
}

RepairReport& RepairReport::operator+=(const RepairReport& other) {
  inserted_start += other.inserted_start;
  inserted_stop += other.inserted_stop;
  dropped_duplicate += other.dropped_duplicate;
  return *this;
}

RepairResult repair_sessions(const std::vector<SessionEvent>& events) {
  RepairResult out;
  std::optional<Session> open;
  const SessionEvent* previous = nullptr;

  auto close = [&](std::int64_t ts, bool inserted) {
    open->events.push_back({std::string(kStopLabel), ts});
    if (inserted) ++out.report.inserted_stop;
    out.sessions.push_back(std::move(*open));
    open.reset();
  };
  auto start = [&](std::int64_t ts, bool inserted) {
    open.emplace();
    open->events.push_back({std::string(kStartLabel), ts});
    if (inserted) ++out.report.inserted_start;
  };

  for (const auto& ev : events) {
    if (previous && *previous == ev) {
      ++out.report.dropped_duplicate;
      continue;
    }
    previous = &ev;
    if (ev.label == kStartLabel) {
      if (open) close(ev.timestamp, true);
      start(ev.timestamp, false);
    } else if (ev.label == kStopLabel) {
      if (!open) start(ev.timestamp, true);
      close(ev.timestamp, false);
    } else {
      if (!open) start(ev.timestamp, true);
      open->events.push_back(ev);
    }
  }
  if (open) close(open->events.back().timestamp, true);
  return out;
}

namespace {

struct RawEvent {
  std::string user;
  SessionEvent event;
};

RawEvent decode_event(const json& j, std::size_t offset) {
  auto fail = [&](const std::string& what) {
    return ParseError("trace record at byte " + std::to_string(offset) + ": " + what, offset);
  };
  if (!j.is_object()) throw fail("expected a JSON object");
  auto user = j.find("user");
  auto label = j.find("label");
  auto ts = j.find("ts");
  if (user == j.end() || !user->is_string()) throw fail("missing string field 'user'");
  if (label == j.end() || !label->is_string()) throw fail("missing string field 'label'");
  if (ts == j.end() || !ts->is_number_integer()) throw fail("missing integer field 'ts'");
  const auto t = ts->get<std::int64_t>();
  if (t < 0) throw fail("negative timestamp");
  auto name = label->get<std::string>();
  if (name.empty()) throw fail("empty label");
  return {user->get<std::string>(), {std::move(name), t}};
}

ParseError json_error(const json::parse_error& e, std::size_t base) {
  const std::size_t at = base + (e.byte > 0 ? e.byte - 1 : 0);
  return ParseError("malformed JSON at byte " + std::to_string(at) + ": " + e.what(), at);
}

}  // namespace

ParsedTraces parse_traces(std::string_view raw) {
  std::vector<RawEvent> events;

  const auto first = raw.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && raw[first] == '[') {
    json doc;
    try {
      doc = json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error& e) {
      throw json_error(e, 0);
    }
    for (const auto& item : doc) events.push_back(decode_event(item, first));
  } else {
    std::size_t pos = 0;
    while (pos < raw.size()) {
      auto eol = raw.find('\n', pos);
      if (eol == std::string_view::npos) eol = raw.size();
      auto line = raw.substr(pos, eol - pos);
      if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
        json j;
        try {
          j = json::parse(line.begin(), line.end());
        } catch (const json::parse_error& e) {
          throw json_error(e, pos);
        }
        events.push_back(decode_event(j, pos));
      }
      pos = eol + 1;
    }
  }

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<SessionEvent>> by_user;
  for (auto& e : events) {
    auto [it, inserted] = by_user.try_emplace(e.user);
    if (inserted) order.push_back(e.user);
    it->second.push_back(std::move(e.event));
  }

  ParsedTraces out;
  for (const auto& user : order) {
    auto& evs = by_user[user];
    std::stable_sort(evs.begin(), evs.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    auto repaired = repair_sessions(evs);
    UserTrace trace{user, std::move(repaired.sessions), std::nullopt};
    if (!trace.sessions.empty()) trace.origin = trace.sessions.front().start_time();
    out.report += repaired.report;
    out.per_user[user] = repaired.report;
    out.traces.push_back(std::move(trace));
  }
  return out;
}

std::string write_traces(const std::vector<UserTrace>& traces) {
  std::string out;
  for (const auto& t : traces)
    for (const auto& s : t.sessions)
      for (const auto& e : s.events) {
        json j{{"user", t.user_id}, {"label", e.label}, {"ts", e.timestamp}};
        out += j.dump();
        out += '\n';
      }
  return out;
}

namespace {
json report_to_json(const RepairReport& r) {
  return json{{"inserted_start", r.inserted_start},
              {"inserted_stop", r.inserted_stop},
              {"dropped_duplicate", r.dropped_duplicate},
              {"total", r.total()}};
}
}  // namespace

std::string repair_report_json(const ParsedTraces& parsed) {
  json j = report_to_json(parsed.report);
  j["users"] = parsed.traces.size();
  json per_user = json::object();
  for (const auto& [user, r] : parsed.per_user)
    if (r.total() > 0) per_user[user] = report_to_json(r);
  j["per_user"] = std::move(per_user);
  return j.dump(2) + "\n";
}

UserTrace segment(const UserTrace& trace, const TimeInterval& interval) {
  UserTrace out{trace.user_id, {}, trace.anchor()};
  const std::int64_t lo = trace.anchor() + interval.t1 * kSecondsPerDay;
  const std::int64_t hi = trace.anchor() + interval.t2 * kSecondsPerDay;
  for (const auto& s : trace.sessions)
    if (s.start_time() >= lo && s.end_time() < hi) out.sessions.push_back(s);
  return out;
}

std::vector<UserTrace> filter_min_sessions(const std::vector<UserTrace>& traces,
                                           std::size_t min_sessions) {
  if (min_sessions < 1) throw ArgumentError("minimum session count must be at least 1");
  std::vector<UserTrace> out;
  for (const auto& t : traces)
    if (t.sessions.size() >= min_sessions) out.push_back(t);
  return out;
}

Vocabulary build_vocabulary(const std::vector<UserTrace>& traces) {
  if (traces.empty()) throw ArgumentError("cannot build a vocabulary from no traces");
  std::set<std::string> seen;
  for (const auto& t : traces)
    for (const auto& s : t.sessions)
      for (const auto& e : s.events)
        if (e.label != kStartLabel && e.label != kStopLabel) seen.insert(e.label);
  return Vocabulary(std::vector<std::string>(seen.begin(), seen.end()));
}

std::vector<std::size_t> encode(const UserTrace& trace, const Vocabulary& vocab) {
  std::vector<std::size_t> out;
  out.reserve(trace.event_count());
  for (const auto& s : trace.sessions)
    for (const auto& e : s.events) out.push_back(vocab.index(e.label));
  return out;
}

TransitionOccurrenceMatrix count_bigrams(const UserTrace& trace, const Vocabulary& vocab) {
  const auto n = static_cast<Eigen::Index>(vocab.size());
  TransitionOccurrenceMatrix m;
  m.counts.setZero(n, n);
  const auto seq = encode(trace, vocab);
  for (std::size_t t = 1; t < seq.size(); ++t) ++m.counts(seq[t - 1], seq[t]);
  return m;
}

}  // namespace tracestyles
