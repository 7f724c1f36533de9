#pragma once

#include <vector>

#include "mwqed/lattice.hpp"

namespace mwqed::rates {

// Ω, Δ in units of ω_r; phase lag φ = q d folded to (-π, π]; pulse in 1/ω_r.
class DriveParams {
public:
    DriveParams() = default;
    DriveParams(double omega_rabi, double delta, double phase_lag = 0.0, double pulse_duration = 0.0);

    double omega_rabi() const { return omega_rabi_; }
    double delta() const { return delta_; }
    double phase_lag() const { return phase_lag_; }
    double quasimomentum() const { return phase_lag_ / pi; }
    double pulse_duration() const { return pulse_duration_; }

private:
    double omega_rabi_ = 0.0;
    double delta_ = 0.0;
    double phase_lag_ = 0.0;
    double pulse_duration_ = 0.0;
};

double fold_phase(double phi);

struct TimedDickeSpec {
    int M = 1;
    int N = 1;
    double q = 0.0;  // units of k_r
    void validate() const;
};

// site labels floor(1 - M/2) .. floor(M/2)
std::vector<int> site_range(int M);

double gamma_single(const lattice::LatticeParams& p, const DriveParams& drive);

// |M^-1 Σ_j e^{i(q - k)dj}|^2 for one emission direction k
double structure_factor(int M, double q, double k);

struct CollectiveRate {
    double forward = 0.0;   // structure factor at +k(Δ)
    double backward = 0.0;  // structure factor at -k(Δ)
    double mean = 0.0;      // both channels weighted equally, as the physical total
};

CollectiveRate gamma_collective_resolved(const lattice::LatticeParams& p, const DriveParams& drive,
                                         const TimedDickeSpec& tds);
// N M Γ1 |M^-1 Σ_j e^{i(q - k)dj}|^2 with k = +k(Δ)
double gamma_collective(const lattice::LatticeParams& p, const DriveParams& drive, const TimedDickeSpec& tds);

// Δ_n = (φ/π + 2n)^2 for |n| <= n_max, sorted and deduplicated
std::vector<double> superradiant_detunings(double phi, int n_max);
// destructive branch (φ/π + 2n + 1)^2
std::vector<double> subradiant_detunings(double phi, int n_max);

// η = d Γ1 / v_g
double retardation(const lattice::LatticeParams& p, const DriveParams& drive);

}  // namespace mwqed::rates
