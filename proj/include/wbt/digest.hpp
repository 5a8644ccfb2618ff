#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wbt::gateway {
struct TickRecord;
}

namespace wbt::records {

/// FNV-1a 64 over the recorded state stream.
class Digest {
 public:
  void add(const gateway::TickRecord& r) noexcept;
  [[nodiscard]] std::uint64_t value() const noexcept { return h_; }

 private:
  void bytes(const void* p, std::size_t n) noexcept;
  void f64(double v) noexcept { bytes(&v, sizeof v); }

  std::uint64_t h_{0xcbf29ce484222325ULL};
};

[[nodiscard]] std::uint64_t digest(const std::vector<gateway::TickRecord>& records) noexcept;
[[nodiscard]] std::string digest_hex(std::uint64_t d);

}  // namespace wbt::records
