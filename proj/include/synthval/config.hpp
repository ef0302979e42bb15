#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace synthval {

// Flat sectioned key-value text:
//
//   # comment
//   top_level_key = value
//   [section]
//   key = value
//
// Keys before the first header live in section "". Later duplicates win.
// The same structure can be read from a JSON object whose members are either
// scalars (section "") or objects of scalars (one section each).
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in);
    static KeyValueConfig parse_string(const std::string& text);
    static KeyValueConfig from_json(const nlohmann::json& j);
    // Dispatches on extension: ".json" is read as JSON, anything else as text.
    static KeyValueConfig load(const std::filesystem::path& path);

    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    void set(const std::string& section, const std::string& key, const std::string& value);
    bool has_section(const std::string& section) const;
    // Sections in lexicographic order.
    std::vector<std::string> sections() const;
    const std::map<std::string, std::string>& section(const std::string& name) const;

    nlohmann::json to_json() const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Splits "a, b ,c" into trimmed items; empty input gives an empty list.
std::vector<std::string> split_list(const std::string& text);
std::string trim(const std::string& text);

}  // namespace synthval
