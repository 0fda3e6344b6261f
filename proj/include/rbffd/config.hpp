#pragma once

#include "rbffd/errors.hpp"
#include "rbffd/problems.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

namespace rbffd {

/// Flat `key = value` configuration. Blank lines and `#` comments are
/// ignored; keys may appear once.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in, std::string_view origin = "<config>")
    {
        KeyValueConfig cfg;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            const std::string where = std::string(origin) + ":" + std::to_string(lineno);
            if (eq == std::string::npos) throw InputError(where + ": expected key = value");
            const std::string key = trim(body.substr(0, eq));
            const std::string value = trim(body.substr(eq + 1));
            if (key.empty()) throw InputError(where + ": empty key");
            if (!cfg.values_.emplace(key, value).second) throw InputError(where + ": duplicate key '" + key + "'");
        }
        return cfg;
    }

    static KeyValueConfig load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open config " + path.string());
        return parse(in, path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    const std::string& text(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end()) throw InputError("missing config key '" + key + "'");
        return it->second;
    }

    std::string text_or(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? text(key) : fallback;
    }

    double number(const std::string& key) const
    {
        const std::string& s = text(key);
        double v = 0.0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size()) {
            throw InputError("config key '" + key + "' is not a number: '" + s + "'");
        }
        return v;
    }

    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::size_t count(const std::string& key) const
    {
        const double v = number(key);
        if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw InputError("config key '" + key + "' must be a non-negative integer");
        }
        return static_cast<std::size_t>(v);
    }

    /// Throws on any key outside `allowed`.
    void require_known(const std::set<std::string>& allowed) const
    {
        for (const auto& [k, v] : values_) {
            if (!allowed.count(k)) throw InputError("unknown config key '" + k + "'");
        }
    }

    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    void write(std::ostream& out) const
    {
        for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
    }

private:
    static std::string trim(std::string_view s)
    {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return std::string(s.substr(b, e - b + 1));
    }

    std::map<std::string, std::string> values_;
};

inline const std::set<std::string>& preset_keys()
{
    static const std::set<std::string> keys{"surface", "pattern", "delta_v", "alpha", "beta",         "gamma", "tau1",
                                            "tau2",    "t_final", "N",       "n",     "kappa_target", "dt"};
    return keys;
}

/// Reads a Turing preset; delta_u is always 0.516 delta_v.
inline TuringPreset turing_preset_from_config(const KeyValueConfig& cfg)
{
    TuringPreset p;
    p.surface = cfg.text("surface");
    p.pattern = cfg.text("pattern");
    p.name = p.surface + "/" + p.pattern;
    p.params.delta_v = cfg.number("delta_v");
    p.params.delta_u = 0.516 * p.params.delta_v;
    p.params.alpha = cfg.number("alpha");
    p.params.beta = cfg.number("beta");
    p.params.gamma = cfg.number("gamma");
    p.params.tau1 = cfg.number("tau1");
    p.params.tau2 = cfg.number("tau2");
    p.params.final_time = cfg.number("t_final");
    p.nodes = cfg.count("N");
    p.stencil = cfg.count("n");
    p.kappa_target = cfg.number("kappa_target");
    p.dt = cfg.number_or("dt", 0.01);
    p.params.validate();
    if (p.stencil == 0) throw InputError("stencil size n must be positive");
    if (!(p.dt > 0.0)) throw InputError("dt must be positive");
    return p;
}

inline KeyValueConfig to_config(const TuringPreset& p)
{
    auto num = [](double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    };
    KeyValueConfig c;
    c.set("surface", p.surface);
    c.set("pattern", p.pattern);
    c.set("delta_v", num(p.params.delta_v));
    c.set("alpha", num(p.params.alpha));
    c.set("beta", num(p.params.beta));
    c.set("gamma", num(p.params.gamma));
    c.set("tau1", num(p.params.tau1));
    c.set("tau2", num(p.params.tau2));
    c.set("t_final", num(p.params.final_time));
    c.set("N", std::to_string(p.nodes));
    c.set("n", std::to_string(p.stencil));
    c.set("kappa_target", num(p.kappa_target));
    c.set("dt", num(p.dt));
    return c;
}

} // namespace rbffd
