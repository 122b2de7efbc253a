#pragma once

// Effective configuration of one CLI run: defaults, then a JSON config file,
// then command-line flags.

#include <charconv>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "widthlab/errors.hpp"
#include "widthlab/exponent.hpp"

namespace widthlab::cli {

using Json = nlohmann::ordered_json;

enum class KeyType { integer, unsigned_integer, real, boolean, text, exponent };

struct Key {
  std::string name;  // JSON key; the flag is --name with '_' -> '-'
  KeyType type;
  Json default_value;
  std::string help;

  std::string flag() const {
    std::string f = name;
    for (char& c : f)
      if (c == '_') c = '-';
    return "--" + f;
  }
};

namespace detail {

inline long long parse_integer(const std::string& key, const std::string& s) {
  long long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail_validation("option '" + key + "' expects an integer, got '" + s + "'");
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail_validation("option '" + key + "' expects a non-negative integer, got '" + s + "'");
  return v;
}

inline double parse_real(const std::string& key, const std::string& s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
    fail_validation("option '" + key + "' expects a finite number, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  fail_validation("option '" + key + "' expects true or false, got '" + s + "'");
}

inline std::string exponent_text(const std::string& key, const std::string& s) {
  try {
    return Exponent::parse(s).to_string();
  } catch (const Error& e) {
    fail_validation("option '" + key + "': " + e.what());
  }
}

/// Normalized value of a flag given as text.
inline Json from_text(const Key& k, const std::string& s) {
  switch (k.type) {
    case KeyType::integer: return parse_integer(k.name, s);
    case KeyType::unsigned_integer: return parse_unsigned(k.name, s);
    case KeyType::real: return parse_real(k.name, s);
    case KeyType::boolean: return parse_bool(k.name, s);
    case KeyType::text: return s;
    case KeyType::exponent: return exponent_text(k.name, s);
  }
  return s;
}

/// Normalized value of a config-file entry.
inline Json from_json(const Key& k, const Json& v) {
  auto wrong = [&](const char* what) -> Json {
    fail_validation("config key '" + k.name + "' expects " + what + ", got " + v.dump());
  };
  switch (k.type) {
    case KeyType::integer:
      if (v.is_number_integer()) return v.get<long long>();
      return wrong("an integer");
    case KeyType::unsigned_integer:
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      return wrong("a non-negative integer");
    case KeyType::real:
      if (v.is_number()) return v.get<double>();
      return wrong("a number");
    case KeyType::boolean:
      if (v.is_boolean()) return v.get<bool>();
      return wrong("true or false");
    case KeyType::text:
      if (v.is_string()) return v.get<std::string>();
      return wrong("a string");
    case KeyType::exponent:
      if (v.is_string()) return exponent_text(k.name, v.get<std::string>());
      if (v.is_number()) return exponent_text(k.name, format_double(v.get<double>()));
      return wrong("an exponent");
  }
  return v;
}

}  // namespace detail

/// Flag bindings of one subcommand; merge() yields the effective config.
class CommandOptions {
 public:
  CommandOptions(CLI::App* app, std::string command, std::vector<Key> keys)
      : command_(std::move(command)), keys_(std::move(keys)) {
    app->add_option("--config", config_path_, "JSON config file; flags override its entries");
    for (const auto& k : keys_) {
      if (k.type == KeyType::boolean) {
        options_[k.name] = app->add_flag(k.flag(), flags_[k.name], k.help);
      } else {
        options_[k.name] = app->add_option(k.flag(), text_[k.name], k.help + " (default " + k.default_value.dump() + ")");
      }
    }
  }

  Json merge() const {
    Json cfg;
    cfg["command"] = command_;
    for (const auto& k : keys_) cfg[k.name] = k.default_value;
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      if (!in) fail_validation("cannot open config file '" + config_path_ + "'");
      Json file;
      try {
        file = Json::parse(in);
      } catch (const Json::exception& e) {
        fail_validation("config file '" + config_path_ + "' is not valid JSON: " + e.what());
      }
      if (!file.is_object()) fail_validation("config file must hold a JSON object");
      for (auto it = file.begin(); it != file.end(); ++it) {
        if (it.key() == "command") {
          if (it.value() != command_)
            fail_validation("config file is for command " + it.value().dump() + ", not '" + command_ + "'");
          continue;
        }
        const Key* k = find(it.key());
        if (!k) fail_validation("unknown config key '" + it.key() + "' for command '" + command_ + "'");
        cfg[k->name] = detail::from_json(*k, it.value());
      }
    }
    for (const auto& k : keys_) {
      const CLI::Option* opt = options_.at(k.name);
      if (opt->count() == 0) continue;
      cfg[k.name] = k.type == KeyType::boolean ? Json(flags_.at(k.name)) : detail::from_text(k, text_.at(k.name));
    }
    return cfg;
  }

 private:
  const Key* find(const std::string& name) const {
    for (const auto& k : keys_)
      if (k.name == name) return &k;
    return nullptr;
  }

  std::string command_;
  std::vector<Key> keys_;
  std::string config_path_;
  std::map<std::string, CLI::Option*> options_;
  std::map<std::string, std::string> text_;
  std::map<std::string, bool> flags_;
};

}  // namespace widthlab::cli
