#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "hsirecon/cassi.hpp"
#include "hsirecon/training.hpp"
#include "hsirecon/unfolding.hpp"

namespace hsirecon::config {

/// Unknown key, duplicate key, or a value that does not parse.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat run description. Text form is one `key = value` per line; blank
/// lines and lines starting with '#' are ignored.
struct RunConfig {
    int stages = 2;
    int channels = 16;
    int cube_size = 8;
    int levels = 2;
    int head_dim = 0;
    int dispersion_step = 1;
    bool exact_hqs = false;
    real mu = 1.0;

    cassi::NoiseConfig::Kind noise = cassi::NoiseConfig::Kind::none;
    real noise_sigma = 0.0;

    // Derived streams: scene `seed`, aperture `seed + 1`, model init
    // `seed + 2`, detector noise `seed + 3`.
    std::uint64_t seed = 0;
    real mask_density = 0.5;

    int train_steps = 200;
    real learning_rate = 4e-4;
    training::LossKind loss = training::LossKind::mse;

    int height = 32;
    int width = 32;
    int bands = 8;

    std::string scene;
    std::string mask;
    std::string measurement;
    std::string checkpoint;
    std::string output;

    unfolding::UnfoldingConfig unfolding() const;
    cassi::NoiseConfig noise_config() const;
};

RunConfig parse_config(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Canonical text form; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& c);

/// Only the keys that fix the model architecture and band count, the part
/// stored inside checkpoints.
std::string model_text(const RunConfig& c);

}  // namespace hsirecon::config
