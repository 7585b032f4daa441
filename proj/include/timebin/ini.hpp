#pragma once

#include <string>
#include <vector>

#include "timebin/config.hpp"

namespace timebin::io {

struct ParseError {
  std::string message;
  int line = 0;
};

class ConfigParseException : public std::exception {
public:
  explicit ConfigParseException(ParseError err) : err_(std::move(err)) {
    what_ = "line " + std::to_string(err_.line) + ": " + err_.message;
  }
  const char *what() const noexcept override { return what_.c_str(); }
  const ParseError &error() const { return err_; }

private:
  ParseError err_;
  std::string what_;
};

/// Parse an experiment configuration from INI text. Sections and keys are
/// fixed by the schema; unknown keys are hard errors.
ExperimentConfig parse_experiment_config(const std::string &text);

/// Load from file; `config_hash` receives a stable FNV-1a hash of the raw
/// file bytes.
ExperimentConfig load_experiment_config(const std::string &path, std::string *config_hash,
                                        std::vector<std::string> *warnings);

std::string fnv1a_hex(const std::string &bytes);

std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &content);

} // namespace timebin::io
