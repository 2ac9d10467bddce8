#include "selfcheck/journal.hpp"

#include <algorithm>
#include <chrono>

#include <json.hpp>

#include "selfcheck/errors.hpp"

namespace selfcheck {

RunJournal::RunJournal(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::app) {
  if (!out_) throw DataError("cannot open journal " + path.string());
}

void RunJournal::add_secret(std::string secret) {
  if (secret.empty()) return;
  // Journal lines are JSON and payloads may embed JSON text (response
  // bodies), so also redact the spellings after repeated escaping.
  std::vector<std::string> forms{secret};
  for (int depth = 0; depth < 3; ++depth) {
    std::string escaped = nlohmann::json(forms.back()).dump();
    forms.push_back(escaped.substr(1, escaped.size() - 2));
  }
  std::lock_guard lock(mutex_);
  for (std::string& form : forms) {
    if (std::find(secrets_.begin(), secrets_.end(), form) == secrets_.end()) {
      secrets_.push_back(std::move(form));
    }
  }
  // Longest first, so an escaped spelling is replaced whole.
  std::stable_sort(secrets_.begin(), secrets_.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
}

std::string RunJournal::redact(std::string line) const {
  for (const std::string& secret : secrets_) {
    std::size_t pos = 0;
    while ((pos = line.find(secret, pos)) != std::string::npos) {
      line.replace(pos, secret.size(), "***");
      pos += 3;
    }
  }
  return line;
}

void RunJournal::record(std::string_view event, std::string_view payload_json) {
  nlohmann::json entry;
  entry["event"] = event;
  entry["unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  entry["data"] = nlohmann::json::parse(payload_json, nullptr, false);
  if (entry["data"].is_discarded()) entry["data"] = std::string(payload_json);
  std::lock_guard lock(mutex_);
  out_ << redact(entry.dump()) << '\n';
  out_.flush();
}

}  // namespace selfcheck
