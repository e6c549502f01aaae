#ifndef FINDIM_CONFIG_HPP
#define FINDIM_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "findim/pde.hpp"
#include "findim/system.hpp"

namespace findim::config {

/// Sampling sizes for the verification pipeline.  The pair-operator grid and
/// tau order are the base values; verification doubles both.
struct AnalysisSettings {
    int grid = 512;
    int n_tau = 16;
    int n_pairs = 10;
    int hull_pairs = 200;
    int n_traj = 8;
    int spectrum_n = 2000;
    int similarity_grid = 128;
    int similarity_pairs = 2;
    std::uint64_t seed = 0;
};

struct RunConfig {
    system::SystemSpec spec;
    pde::SolverSettings solver;
    AnalysisSettings analysis;
};

/// Parse a TOML config with [system], [solver] and [analysis] tables.
/// Expressions are strings, matrices row-major number lists.  A cutoff radius
/// in [system] is applied to f and g immediately (see apply_auto_cutoff); the
/// radius stays recorded on the spec, but save never re-emits the key because
/// the saved expressions already carry the wrap.  Validation failures throw
/// ConfigError with the line;
/// that includes boundary compatibility |f(x,0)|, |g(x,0)| <= 1e-12 at x = 0, 1.
RunConfig parse_config(std::string_view text);

RunConfig load(const std::string& path);

/// Inverse of parse_config up to formatting: parse_config(saved text) gives an
/// equivalent config.
void save(std::ostream& os, const RunConfig& cfg);

}  // namespace findim::config

#endif
