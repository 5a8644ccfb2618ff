#pragma once

// Line-delimited episode records (header, one line per tick, footer), the
// state digest, and deterministic replay. Format in RECORDS.md.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wbt/digest.hpp"
#include "wbt/session.hpp"

namespace wbt::records {

inline constexpr int kSchemaVersion = 1;

/// Everything replay needs to rebuild the episode.
struct RecordHeader {
  int version{kSchemaVersion};
  std::string robot{"g1"};        // preset name or description path
  std::string reward_preset{"g1"};
  std::uint64_t seed{0};
  double control_hz{50.0};
  double max_seconds{20.0};
  std::string torque_law{"literal"};
  double push_interval{4.0};
  robot::Range push_vel_range{-0.5, 0.5};
  bool randomize{false};
  bool perfect_tracking{false};
  bool terms{false};
};

[[nodiscard]] RecordHeader header_for(const gateway::SessionConfig& cfg);

/// Rebuilds the episode configuration named by a header.
[[nodiscard]] gateway::EpisodeConfig episode_config(const RecordHeader& h,
                                                    const std::filesystem::path& data_dir = robot::default_data_dir());

class RecordWriter {
 public:
  RecordWriter(const std::filesystem::path& path, const RecordHeader& header);
  ~RecordWriter();
  RecordWriter(const RecordWriter&) = delete;
  RecordWriter& operator=(const RecordWriter&) = delete;

  void write(const gateway::TickRecord& r);
  /// Writes the footer (count and digest). Called by the destructor if needed.
  void close();

  [[nodiscard]] std::uint64_t count() const noexcept { return count_; }

 private:
  std::ofstream out_;
  Digest digest_;
  std::uint64_t count_{0};
  bool closed_{false};
};

struct RecordFile {
  RecordHeader header;
  std::vector<gateway::TickRecord> records;
  std::uint64_t digest{0};  // from the footer
};

/// Throws VersionError on an unknown schema version and TruncationError when
/// the footer is missing or disagrees with the body.
[[nodiscard]] RecordFile read_records(const std::filesystem::path& path);

[[nodiscard]] std::string to_json_line(const gateway::TickRecord& r);
[[nodiscard]] gateway::TickRecord from_json_line(std::string_view line);

struct ReplayResult {
  std::uint64_t recorded{0};
  std::uint64_t replayed{0};
  std::size_t ticks{0};
  [[nodiscard]] bool match() const noexcept { return recorded == replayed; }
};

/// Re-runs the recorded applied commands and upper targets against a fresh
/// episode, with the recorded seed unless `seed_override` is given.
[[nodiscard]] ReplayResult replay(const RecordFile& file, std::optional<std::uint64_t> seed_override = std::nullopt,
                                  const std::filesystem::path& data_dir = robot::default_data_dir());

}  // namespace wbt::records
