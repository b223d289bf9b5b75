#include "ccra/run_config.hpp"

#include <fstream>
#include <sstream>

#include "ccra/errors.hpp"

namespace ccra {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::size_t parse_size(const std::string& value, std::size_t line_no, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size() || v <= 0) throw std::invalid_argument("nonpositive");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": " + key +
                      " must be a positive integer, got '" + value + "'");
  }
}

double parse_double(const std::string& value, std::size_t line_no, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": " + key + " must be a number, got '" +
                      value + "'");
  }
}

}  // namespace

CcraConfig parse_run_config(std::istream& in) {
  CcraConfig cfg;
  bool sigma_given = false;
  bool kernel_given = false;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" + text +
                        "'");
    }
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));

    if (key == "L") {
      cfg.layer_count = parse_size(value, line_no, key);
    } else if (key == "N") {
      cfg.patch_count = parse_size(value, line_no, key);
    } else if (key == "d") {
      cfg.feature_dim = parse_size(value, line_no, key);
    } else if (key == "T") {
      cfg.token_count = parse_size(value, line_no, key);
    } else if (key == "d_hidden") {
      cfg.hidden_dim = parse_size(value, line_no, key);
    } else if (key == "d_llm") {
      cfg.llm_dim = parse_size(value, line_no, key);
    } else if (key == "V") {
      cfg.vocab_size = parse_size(value, line_no, key);
    } else if (key == "k") {
      cfg.kernel_size = parse_size(value, line_no, key);
      kernel_given = true;
    } else if (key == "sigma") {
      cfg.sigma = parse_double(value, line_no, key);
      sigma_given = true;
    } else if (key == "seed") {
      try {
        cfg.seed = std::stoull(value);
      } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no) + ": seed must be an integer, got '" +
                          value + "'");
      }
    } else if (key == "variant") {
      try {
        cfg.variant = parse_variant(value);
      } catch (const UnknownVariant& e) {
        throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
      }
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }

  if (kernel_given && !sigma_given) {
    cfg.sigma = static_cast<double>(cfg.kernel_size) / 3.0;
  }
  cfg.validate();
  return cfg;
}

CcraConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse_run_config(in);
}

}  // namespace ccra
