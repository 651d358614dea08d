#pragma once

// Closed-form per-peer resource figures for the three architectures.

#include <string>
#include <vector>

#include "p2pcbir/workload.hpp"

namespace p2pcbir {

enum class Architecture { supernode, percolation, prism };

std::string to_string(Architecture arch);

struct CostReport {
    Architecture architecture = Architecture::supernode;
    WorkloadParams workload;
    double b_ave = 0;  // bytes/s
    double b_max = 0;
    double d_ave = 0;  // bytes
    double d_max = 0;
    double p_ave = 0;  // FlOp/s
    double p_max = 0;

    // Architecture parameters echoed back; unused ones stay zero.
    double supernode_fraction = 0;
    double k_max = 0;
    double norm_a = 0;

    // Super-node only: the leading-order B_ave = RzsN used in the
    // published table, next to the exact RNz(s + 1/N) in b_ave.
    double b_ave_approx = 0;
};

/// Default normalization A = 1/1.6 used by the analytical percolation model.
inline constexpr double kAnalyticNormA = 0.625;

CostReport supernode_costs(const WorkloadParams& w, double s);

/// General form in k_max and A.
CostReport percolation_costs(const WorkloadParams& w, double k_max, double norm_a = kAnalyticNormA);

/// The k_max = sqrt(N) closed forms, evaluated independently of
/// percolation_costs so the two can be cross-checked.
CostReport percolation_costs_sqrt_n(const WorkloadParams& w, double norm_a = kAnalyticNormA);

CostReport prism_costs(const WorkloadParams& w);

/// <k> = A ln k_max, <k^2> = A k_max, q_c = <k>/(<k^2> - <k>). Throws Error
/// when the denominator is not positive.
double percolation_threshold_model(double k_max, double norm_a = kAnalyticNormA);

/// All three reports for one workload (super-node at s = 1/sqrt(N),
/// percolation at k_max = sqrt(N)).
std::vector<CostReport> standard_tables(const WorkloadParams& w);

/// Rows B_ave..P_max, one column per report.
std::string cost_tables_csv(const std::vector<CostReport>& reports);
std::string cost_tables_text(const std::vector<CostReport>& reports);

}  // namespace p2pcbir
