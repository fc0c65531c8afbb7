#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsirecon/config.hpp"

namespace hsirecon::cli {

/// Process exit status per error class.
enum Exit : int {
    ok = 0,
    unexpected = 1,
    usage = 2,
    bad_config = 3,
    missing_file = 4,
    bad_format = 5,
    shape_mismatch = 6,
    bad_argument = 7,
    transform_failure = 8,
    diverged = 9,
    gradcheck_failed = 10,
};

/// Flags accepted by every subcommand.
struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool exact_hqs = false;
    std::optional<int> stages;
    std::optional<int> cube_size;
    std::string dtype = "f64";

    config::RunConfig resolve(config::RunConfig base = {}) const;
};

struct SimulateArgs {
    std::string scene;
    std::string mask;
    std::string save_scene;
    std::string save_mask;
};

struct ReconstructArgs {
    std::string measurement;
    std::string mask;
    std::string checkpoint;
    bool identity_prior = false;
    std::optional<int> bands;
};

struct TrainArgs {
    std::string scene;
    std::string mask;
    std::string measurement;
    std::string loss_csv;
};

struct GradcheckArgs {
    std::vector<int> size{8, 8, 3};
    double transmission = 1e-3;
    int samples = 8;
    double tolerance = 1e-4;
    std::string corrupt_grad;
};

struct EvalArgs {
    std::vector<std::string> ref;
    std::vector<std::string> est;
    std::vector<std::string> scene_id;
    bool no_timing = false;
    std::string rgb;
};

struct VizFreqArgs {
    std::string input;
    int channel = 0;
};

int simulate(const CommonFlags& common, const SimulateArgs& args);
int reconstruct(const CommonFlags& common, const ReconstructArgs& args);
int train(const CommonFlags& common, const TrainArgs& args);
int gradcheck(const CommonFlags& common, const GradcheckArgs& args);
int eval(const CommonFlags& common, const EvalArgs& args);
int viz_freq(const CommonFlags& common, const VizFreqArgs& args);

}  // namespace hsirecon::cli
