#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kobound/errors.hpp"
#include "kobound/models.hpp"

namespace kobound {

/// Flat `key = value` config with `#` comments and `[section]` headers.
/// Sections may repeat (each repeat is kept in order); keys before the first
/// header land in the unnamed section "".
struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> get(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        return std::nullopt;
    }
};

struct Config {
    std::vector<ConfigSection> sections;

    const ConfigSection* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace detail

inline Config parse_config(std::istream& in) {
    Config cfg;
    cfg.sections.push_back({"", {}});
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("unterminated section header", line_no);
            cfg.sections.push_back({detail::trim(line.substr(1, line.size() - 2)), {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", line_no);
        cfg.sections.back().entries.emplace_back(key, value);
    }
    return cfg;
}

inline Config parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("parse_config_file: cannot open " + path);
    return parse_config(in);
}

inline Config parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

namespace detail {

/// Lists accept spaces and/or commas as separators.
inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::string item;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == ',') {
            if (!item.empty()) items.push_back(std::move(item));
            item.clear();
        } else {
            item.push_back(c);
        }
    }
    if (!item.empty()) items.push_back(std::move(item));
    return items;
}

inline long long to_int(const std::string& s) {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw InputError("bad integer '" + s + "'");
    return v;
}

inline double to_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw InputError("bad number '" + s + "'");
    return v;
}

inline bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw InputError("bad boolean '" + s + "'");
}

inline std::vector<long long> to_int_list(const std::string& s) {
    std::vector<long long> out;
    for (const auto& item : split_list(s)) out.push_back(to_int(item));
    return out;
}

inline std::vector<double> to_double_list(const std::string& s) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(to_double(item));
    return out;
}

}  // namespace detail

/// Sweep settings; the defaults are the desk-scale protocol (three scales,
/// five sample sizes, five seeds, five-point lambda grid).
struct SweepConfig {
    std::vector<int> h_list = {8, 16, 32};
    std::vector<long long> n_grid = {4, 8, 16, 32, 64};
    int seeds = 5;
    std::vector<double> lambda_grid = {1e-6, 1e-4, 1e-2, 1.0, 1e2};
    int val_size = 32;
    int test_size = 128;
    double tikhonov_alpha = 0.1;
    Metric metric = Metric::mse;
    bool relu_at_eval = false;
    std::uint64_t base_seed = 1;
    int parallelism = 0;  // 0 = pick from KOBOUND_WORKERS or hardware
};

inline void validate(const SweepConfig& cfg) {
    if (cfg.h_list.empty()) throw InputError("sweep config: empty h list");
    for (int h : cfg.h_list)
        if (h < 2) throw InputError("sweep config: h must be >= 2");
    if (cfg.n_grid.empty()) throw InputError("sweep config: empty n_grid");
    for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
        if (cfg.n_grid[i] < 2) throw InputError("sweep config: all N must be >= 2");
        if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1])
            throw InputError("sweep config: n_grid must be strictly increasing");
    }
    if (cfg.seeds < 1) throw InputError("sweep config: seeds must be >= 1");
    if (cfg.lambda_grid.empty()) throw InputError("sweep config: empty lambda_grid");
    if (cfg.val_size < 1 || cfg.test_size < 1)
        throw InputError("sweep config: val_size and test_size must be >= 1");
    if (!(cfg.tikhonov_alpha > 0.0)) throw InputError("sweep config: tikhonov_alpha must be > 0");
}

inline SweepConfig sweep_config_from(const Config& cfg) {
    SweepConfig sc;
    const ConfigSection* sec = cfg.find("sweep");
    if (!sec) sec = cfg.find("");
    if (sec) {
        for (const auto& [key, value] : sec->entries) {
            if (key == "h") {
                sc.h_list.clear();
                for (long long h : detail::to_int_list(value)) sc.h_list.push_back(static_cast<int>(h));
            } else if (key == "n_grid") {
                sc.n_grid = detail::to_int_list(value);
            } else if (key == "seeds") {
                sc.seeds = static_cast<int>(detail::to_int(value));
            } else if (key == "lambda_grid") {
                sc.lambda_grid = detail::to_double_list(value);
            } else if (key == "val_size") {
                sc.val_size = static_cast<int>(detail::to_int(value));
            } else if (key == "test_size") {
                sc.test_size = static_cast<int>(detail::to_int(value));
            } else if (key == "tikhonov_alpha") {
                sc.tikhonov_alpha = detail::to_double(value);
            } else if (key == "metric") {
                sc.metric = metric_from_string(value);
            } else if (key == "relu_at_eval") {
                sc.relu_at_eval = detail::to_bool(value);
            } else if (key == "base_seed") {
                sc.base_seed = static_cast<std::uint64_t>(detail::to_int(value));
            } else if (key == "parallelism") {
                sc.parallelism = static_cast<int>(detail::to_int(value));
            } else {
                throw InputError("sweep config: unknown key '" + key + "'");
            }
        }
    }
    validate(sc);
    return sc;
}

}  // namespace kobound
