#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace selfcheck {

// Append-only run journal, one JSON object per line. Every registered secret
// is replaced by "***" before a line reaches the file. Safe to share
// between threads.
class RunJournal {
 public:
  explicit RunJournal(const std::filesystem::path& path);

  void add_secret(std::string secret);

  // `payload_json` must be a JSON value; it is embedded as the "data" member.
  void record(std::string_view event, std::string_view payload_json);

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::string redact(std::string line) const;

  std::filesystem::path path_;
  std::ofstream out_;
  std::vector<std::string> secrets_;
  mutable std::mutex mutex_;
};

}  // namespace selfcheck
