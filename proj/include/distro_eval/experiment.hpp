#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "distro_eval/hyperparams.hpp"

namespace distro_eval {

/// A trainable the sweep runner can execute.
///
/// run_trial must be a pure function of (point, seed) and must not touch
/// shared mutable state: the runner calls it concurrently from several
/// threads. Throwing marks the trial as failed.
struct Experiment {
    std::string name;
    HyperParamSpace space;
    bool higher_is_better = true;
    std::function<double(const HyperParamPoint&, std::uint64_t)> run_trial;
};

}  // namespace distro_eval
