#pragma once

// Flat `key = value` run configuration. Unknown keys are rejected; every key
// has a documented default (see defaults()).

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ocgl/learner.hpp"
#include "ocgl/stream.hpp"

namespace ocgl {

class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);
  /// Lines of `key = value`; `#` starts a comment.
  static RunConfig from_text(std::string_view text, const std::string& origin = "<text>");

  void set(const std::string& key, const std::string& value);
  /// Applies one `key=value` assignment.
  void apply_override(std::string_view assignment);

  [[nodiscard]] const std::string& get(const std::string& key) const;
  [[nodiscard]] std::size_t get_size(const std::string& key) const;
  [[nodiscard]] double get_double(const std::string& key) const;
  [[nodiscard]] bool get_bool(const std::string& key) const;
  [[nodiscard]] std::uint64_t get_u64(const std::string& key) const;
  /// Comma-separated sizes; the token `all` stands for an unlimited fan-out.
  [[nodiscard]] std::vector<std::size_t> get_sizes(const std::string& key) const;
  [[nodiscard]] std::vector<std::uint64_t> get_u64s(const std::string& key) const;
  [[nodiscard]] std::vector<int> get_ints(const std::string& key) const;

  [[nodiscard]] const std::map<std::string, std::string>& values() const noexcept { return values_; }
  /// Sorted `key = value` lines.
  [[nodiscard]] std::string echo() const;

  [[nodiscard]] LearnerConfig learner() const;
  [[nodiscard]] SbmSpec sbm() const;

  /// Every accepted key with its default value and a one-line description.
  static const std::vector<std::pair<std::string, std::pair<std::string, std::string>>>& defaults();

 private:
  std::map<std::string, std::string> values_;
};

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace ocgl
