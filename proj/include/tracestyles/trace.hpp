#pragma once

// Logged event traces: parsing, session repair, time segmentation,
// vocabularies and transition-occurrence (bigram) matrices.

#include "tracestyles/numeric.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracestyles {

inline constexpr std::string_view kStartLabel = "startS";
inline constexpr std::string_view kStopLabel = "stopS";
inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Ordered label set with a bijection label <-> index in [0, n).
/// startS is always index 0 and stopS index 1.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// `labels` must be unique and non-empty; startS/stopS are prepended when missing
  /// and moved to the front otherwise. Remaining labels keep their given order.
  explicit Vocabulary(std::vector<std::string> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t index) const { return labels_.at(index); }

  std::optional<std::size_t> find(std::string_view label) const;
  /// Throws ArgumentError naming the label when it is not in the vocabulary.
  std::size_t index(std::string_view label) const;

  std::size_t start_index() const noexcept { return 0; }
  std::size_t stop_index() const noexcept { return 1; }

  bool operator==(const Vocabulary& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct SessionEvent {
  std::string label;
  std::int64_t timestamp = 0;  // seconds since epoch

  bool operator==(const SessionEvent&) const = default;
};

/// startS ... stopS, timestamps non-decreasing, markers only at the ends.
struct Session {
  std::vector<SessionEvent> events;

  std::int64_t start_time() const { return events.front().timestamp; }
  std::int64_t end_time() const { return events.back().timestamp; }
  bool operator==(const Session&) const = default;
};

struct UserTrace {
  std::string user_id;
  std::vector<Session> sessions;
  /// Timestamp of the user's first-ever session. Time intervals are measured
  /// from here; it survives segmentation so that segmenting is idempotent.
  /// When unset the first retained session's start is used.
  std::optional<std::int64_t> origin;

  std::int64_t anchor() const;
  std::size_t event_count() const;
  bool operator==(const UserTrace&) const = default;
};

/// Half-open [t1, t2) in whole days from the user's first session.
struct TimeInterval {
  std::int64_t t1 = 0;
  std::int64_t t2 = 0;

  TimeInterval() = default;
  TimeInterval(std::int64_t first_day, std::int64_t end_day);
  /// "t1:t2" or "t1-t2".
  static TimeInterval parse(std::string_view text);
  /// Directory-friendly "t1-t2".
  std::string name() const;
  bool operator==(const TimeInterval&) const = default;
};

struct RepairReport {
  std::size_t inserted_start = 0;
  std::size_t inserted_stop = 0;
  std::size_t dropped_duplicate = 0;

  std::size_t total() const { return inserted_start + inserted_stop + dropped_duplicate; }
  RepairReport& operator+=(const RepairReport& other);
  bool operator==(const RepairReport&) const = default;
};

struct RepairResult {
  std::vector<Session> sessions;
  RepairReport report;
};

struct ParsedTraces {
  std::vector<UserTrace> traces;
  RepairReport report;
  std::map<std::string, RepairReport> per_user;
};

/// Parses newline-delimited JSON events ({"user","label","ts"}) or a single
/// JSON array of such objects. Events are grouped by user (order of first
/// appearance), stably sorted by timestamp and split into sessions by
/// repair_sessions. Throws ParseError carrying the byte offset.
ParsedTraces parse_traces(std::string_view raw);

/// Writes traces as newline-delimited JSON, one event per line.
std::string write_traces(const std::vector<UserTrace>& traces);

std::string repair_report_json(const ParsedTraces& parsed);

/// Splits a time-ordered event stream into well-formed sessions:
/// a stopS is inserted before an unexpected startS (at that startS's timestamp),
/// a startS is inserted before orphan events (at the first orphan's timestamp),
/// a trailing open session is closed at its last timestamp, and exact
/// consecutive duplicates (same label, same timestamp) are dropped.
RepairResult repair_sessions(const std::vector<SessionEvent>& events);

/// Sessions starting on or after day t1 and ending strictly before day t2.
UserTrace segment(const UserTrace& trace, const TimeInterval& interval);

std::vector<UserTrace> filter_min_sessions(const std::vector<UserTrace>& traces,
                                           std::size_t min_sessions = 5);

/// startS, stopS, then every other label seen in lexicographic order.
Vocabulary build_vocabulary(const std::vector<UserTrace>& traces);

/// Labels of the trace as vocabulary indices, sessions concatenated.
std::vector<std::size_t> encode(const UserTrace& trace, const Vocabulary& vocab);

struct TransitionOccurrenceMatrix {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> counts;

  std::int64_t total() const { return counts.sum(); }
};

/// Counts of adjacent label pairs in the session-concatenated stream; the
/// stopS -> startS pair between consecutive sessions is included.
TransitionOccurrenceMatrix count_bigrams(const UserTrace& trace, const Vocabulary& vocab);

}  // namespace tracestyles
