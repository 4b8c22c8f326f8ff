#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qcurv/grid.hpp"

namespace qcurv {

// int ((-Delta)^{n/4} u)^2 dx: int |grad u|^2 for n = 2, int (Delta u)^2 for n = 4.
double halfpower_energy(const Field& u, int n);

enum class TrialKind {
    Zero,           // u = 0
    CappedLog,      // s/2 log((1+r^2)/(1+e^{-2t} r^2)): log r on [1, e^t], capped beyond
    MoserProfile,   // s/2 log((1+r^2)/(r^2+e^{-2t})): log(1/r) on [e^{-t}, 1], capped inside
    ScaledBump,     // s (1 - (r/lambda)^2)^4 on r < lambda
    BesselSum,      // sum_k a_k J_0(k r) e^{-(r/sigma)^2}
    Mixed,          // the four non-trivial kinds in equal shares
};

std::string to_string(TrialKind k);
TrialKind parse_trial_kind(const std::string& name);

struct TrialFamily {
    TrialKind kind = TrialKind::Mixed;
    std::size_t count = 200;
    std::uint64_t seed = 1;
    // Amplitudes are drawn around the critical value 2 min{eps, 1}.
    double epsilon = 0.5;
};

std::vector<Field> generate_family(const TrialFamily& family, const GridPtr& grid);

// e^{n gamma} = 2^{n(1+eps)/2} (1 + r^2)^{-n(1+eps)/2}.
Field mta_weight(const GridPtr& grid, double epsilon);

// n / (2 Lambda_n min{eps, 1}).
double mta_coefficient(int n, double epsilon);
// The same constant written as n^2 / (4 b_n min{eps, 1}), b_n = n (2 pi)^n / |S^{n-1}|.
double mta_coefficient_via_bn(int n, double epsilon);

struct MtaTrial {
    std::size_t id = 0;
    double energy = 0.0;
    double lhs = 0.0;  // log int e^{n|u - mean|} e^{n gamma} dx
    double gap = 0.0;  // lhs - coefficient * energy
    bool rejected = false;
};

// lhs - coefficient * energy for one trial, mean taken against e^{n gamma}.
MtaTrial mta_trial(const Field& u, double epsilon);

struct MtaReport {
    double epsilon = 0.0;
    double coefficient = 0.0;
    double margin = 0.1;
    double c_fit = 0.0;  // max gap on the calibration half
    std::size_t violations = 0;  // validation trials with gap > c_fit + margin
    std::size_t rejected = 0;    // trials dropped for exponential overflow
    std::vector<MtaTrial> trials;
    std::vector<std::size_t> calibration;
    std::vector<std::size_t> validation;
};

// Splits the family 50/50 by a seeded shuffle, fits c on one half and counts
// violations on the other.
MtaReport mta_scan(const TrialFamily& family, double epsilon, const GridPtr& grid, double margin = 0.1);

// Grid used by the inequality lab: clustered at the origin (core radius 0.01)
// and reaching far enough to resolve the capped profiles.
GridPtr mta_grid(int n, std::size_t nodes = 3000, double r_max = 1e5);

std::string to_json(const MtaReport& report);
// Columns: trial,energy,lhs,gap.
std::string trials_csv(const MtaReport& report);

// ||u / r^k||_{L^p(B_1)} / ||grad^k u||_{L^p(B_1)} for k in {1, 2}; grad^2 u is
// measured by the Hessian norm sqrt(u''^2 + (n-1)(u'/r)^2). Requires u = 0
// beyond r = 1 and k p < n. Returns 0 for u = 0.
double hardy_ratio(const Field& u, int k, double p);

struct HardyScan {
    double max_ratio = 0.0;          // on the base grid
    double refined_max_ratio = 0.0;  // same trials, twice the nodes
    double drift = 0.0;              // relative change between the two
};

// Largest hardy_ratio(., 1, p) over `count` seeded superpositions of one to
// three bumps a (1 - (r/lambda)^2)^4 supported in B_1, with p = n/2, on grids
// of `nodes` and 2 `nodes` nodes.
HardyScan hardy_scan(int n, std::size_t count, std::uint64_t seed, std::size_t nodes = 1000);

// First and second radial derivatives by three-point differences.
std::vector<double> radial_derivative(const Field& u);
std::vector<double> radial_second_derivative(const Field& u);

}  // namespace qcurv
