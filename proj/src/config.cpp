#include "hsirecon/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "hsirecon/io.hpp"

namespace hsirecon::config {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v)
{
    T out{};
    auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || end != v.data() + v.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

struct Field {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number(T RunConfig::*m)
{
    return {[m](RunConfig& c, const std::string& v) { c.*m = parse_number<T>("", v); },
            [m](const RunConfig& c) {
                if constexpr (std::is_floating_point_v<T>)
                    return io::format_real(c.*m);
                else
                    return std::to_string(c.*m);
            }};
}

Field text(std::string RunConfig::*m)
{
    return {[m](RunConfig& c, const std::string& v) { c.*m = v; }, [m](const RunConfig& c) { return c.*m; }};
}

const std::map<std::string, Field>& fields()
{
    static const std::map<std::string, Field> table = {
        {"stages", number(&RunConfig::stages)},
        {"channels", number(&RunConfig::channels)},
        {"cube_size", number(&RunConfig::cube_size)},
        {"levels", number(&RunConfig::levels)},
        {"head_dim", number(&RunConfig::head_dim)},
        {"dispersion_step", number(&RunConfig::dispersion_step)},
        {"exact_hqs", {[](RunConfig& c, const std::string& v) { c.exact_hqs = parse_bool("exact_hqs", v); },
                       [](const RunConfig& c) { return std::string(c.exact_hqs ? "true" : "false"); }}},
        {"mu", number(&RunConfig::mu)},
        {"noise", {[](RunConfig& c, const std::string& v) {
                       if (v == "none")
                           c.noise = cassi::NoiseConfig::Kind::none;
                       else if (v == "gaussian")
                           c.noise = cassi::NoiseConfig::Kind::gaussian;
                       else
                           throw ConfigError("noise must be none or gaussian, got '" + v + "'");
                   },
                   [](const RunConfig& c) {
                       return std::string(c.noise == cassi::NoiseConfig::Kind::none ? "none" : "gaussian");
                   }}},
        {"noise_sigma", number(&RunConfig::noise_sigma)},
        {"seed", number(&RunConfig::seed)},
        {"mask_density", number(&RunConfig::mask_density)},
        {"train_steps", number(&RunConfig::train_steps)},
        {"learning_rate", number(&RunConfig::learning_rate)},
        {"loss", {[](RunConfig& c, const std::string& v) {
                      if (v == "mse")
                          c.loss = training::LossKind::mse;
                      else if (v == "charbonnier")
                          c.loss = training::LossKind::charbonnier;
                      else
                          throw ConfigError("loss must be mse or charbonnier, got '" + v + "'");
                  },
                  [](const RunConfig& c) {
                      return std::string(c.loss == training::LossKind::mse ? "mse" : "charbonnier");
                  }}},
        {"height", number(&RunConfig::height)},
        {"width", number(&RunConfig::width)},
        {"bands", number(&RunConfig::bands)},
        {"scene", text(&RunConfig::scene)},
        {"mask", text(&RunConfig::mask)},
        {"measurement", text(&RunConfig::measurement)},
        {"checkpoint", text(&RunConfig::checkpoint)},
        {"output", text(&RunConfig::output)},
    };
    return table;
}

}  // namespace

unfolding::UnfoldingConfig RunConfig::unfolding() const
{
    unfolding::UnfoldingConfig u;
    u.stages = stages;
    u.channels = channels;
    u.cube_size = cube_size;
    u.levels = levels;
    u.head_dim = head_dim;
    u.exact_hqs_mode = exact_hqs;
    u.mu = mu;
    return u;
}

cassi::NoiseConfig RunConfig::noise_config() const { return {noise, noise_sigma, seed + 3}; }

RunConfig parse_config(const std::string& text, RunConfig base)
{
    std::istringstream in(text);
    std::string line;
    std::set<std::string> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto it = fields().find(key);
        if (it == fields().end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        try {
            it->second.set(base, value);
        } catch (const ConfigError&) {
            throw ConfigError("line " + std::to_string(lineno) + ": bad value for " + key + ": '" + value + "'");
        }
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base)
{
    return parse_config(io::read_text(path), std::move(base));
}

std::string to_text(const RunConfig& c)
{
    std::string out;
    for (const auto& [key, field] : fields()) out += key + " = " + field.get(c) + '\n';
    return out;
}

std::string model_text(const RunConfig& c)
{
    static const char* keys[] = {"bands", "channels", "cube_size", "dispersion_step", "exact_hqs", "head_dim",
                                 "levels", "mu", "stages"};
    std::string out;
    for (const char* key : keys) out += std::string(key) + " = " + fields().at(key).get(c) + '\n';
    return out;
}

}  // namespace hsirecon::config
