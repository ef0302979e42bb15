#include "synthval/config.hpp"

#include <fstream>
#include <sstream>

#include "synthval/error.hpp"

namespace synthval {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    if (trim(text).empty()) return items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) items.push_back(trim(item));
    return items;
}

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError("malformed section header at line " + std::to_string(line_no));
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value' at line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("empty key at line " + std::to_string(line_no));
        cfg.sections_[section][key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

namespace {

std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + scalar_text(v[i]);
        return out;
    }
    return v.dump();
}

}  // namespace

KeyValueConfig KeyValueConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("JSON config must be an object");
    KeyValueConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (value.is_object()) {
            auto& sec = cfg.sections_[key];
            for (const auto& [k, v] : value.items()) {
                if (v.is_object()) throw ParseError("JSON config nests deeper than one section: " + key + "." + k);
                sec[k] = scalar_text(v);
            }
        } else {
            cfg.sections_[""][key] = scalar_text(value);
        }
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    if (path.extension() == ".json") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
        return from_json(j);
    }
    return parse(in);
}

std::optional<std::string> KeyValueConfig::get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::string KeyValueConfig::get_or(const std::string& section, const std::string& key, const std::string& fallback) const {
    return get(section, key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return d;
    } catch (const std::exception&) {
        throw ParseError("[" + section + "] " + key + ": expected a number, got '" + *v + "'");
    }
}

long long KeyValueConfig::get_int(const std::string& section, const std::string& key, long long fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const long long n = std::stoll(*v, &used);
        if (used != v->size()) throw std::invalid_argument(*v);
        return n;
    } catch (const std::exception&) {
        throw ParseError("[" + section + "] " + key + ": expected an integer, got '" + *v + "'");
    }
}

bool KeyValueConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ParseError("[" + section + "] " + key + ": expected a boolean, got '" + *v + "'");
}

void KeyValueConfig::set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = value;
}

bool KeyValueConfig::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

std::vector<std::string> KeyValueConfig::sections() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : sections_) out.push_back(name);
    return out;
}

const std::map<std::string, std::string>& KeyValueConfig::section(const std::string& name) const {
    static const std::map<std::string, std::string> empty;
    auto it = sections_.find(name);
    return it == sections_.end() ? empty : it->second;
}

nlohmann::json KeyValueConfig::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, keys] : sections_) {
        if (name.empty()) {
            for (const auto& [k, v] : keys) j[k] = v;
        } else {
            j[name] = keys;
        }
    }
    return j;
}

}  // namespace synthval
