#ifndef FINDIM_PIPELINE_HPP
#define FINDIM_PIPELINE_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "findim/config.hpp"

namespace findim::pipeline {

struct CheckEntry {
    std::string name;
    std::string status;  // PASS, FAIL, WARN or ASSUMED
    double metric = 0.0;
    std::string detail;  // cites the tolerance, sample counts and any witness
};

/// The five named checks gate `overall`; WARN and ASSUMED entries never do.
struct VerdictReport {
    std::vector<CheckEntry> entries;
    bool overall = false;
    nlohmann::ordered_json report;  // full machine-readable body (no timestamps)
};

/// Full verification pipeline: diagonalize, transform if needed, sample the
/// attractor, check consistency, spectrum gaps, per-pair decomposition.
/// Writes report.json, manifest.json, spectrum.csv and gaps.csv into out_dir.
/// Stage failures become FAIL entries rather than exceptions.
VerdictReport run_verify(const config::RunConfig& cfg, const std::string& out_dir);

/// Spectrum-only analysis for a given diagonal; writes spectrum.csv, gaps.csv
/// and gap_summary.json.  Propagates EmptySelection when no gap qualifies.
nlohmann::ordered_json run_spectrum(const Eigen::VectorXd& d, int N, double alpha,
                                    const std::string& out_dir);

/// Long-run simulation batch; writes trajectory_<k>.csv per trajectory plus a
/// manifest, and returns a summary with the dissipativity surrogate.
/// Propagates BlowUp.
nlohmann::ordered_json run_simulate(const config::RunConfig& cfg, const std::string& out_dir);

void print_table(std::ostream& os, const VerdictReport& verdict);

}  // namespace findim::pipeline

#endif
