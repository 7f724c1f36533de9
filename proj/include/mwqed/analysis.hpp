#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mwqed::analysis {

using cplx = std::complex<double>;

struct Series {
    std::vector<double> t;
    std::vector<double> y;
};

struct Window {
    double t_min = 0.0;
    double t_max = 0.0;  // 0 means the whole series
};

struct PiecewiseExpFit {
    double gamma_early = 0.0;
    double gamma_late = 0.0;
    double t_c = 0.0;
    double log_p0 = 0.0;           // ln P at the first window point, held fixed
    double sigma_gamma_early = 0.0;
    double sigma_gamma_late = 0.0;
    double sigma_t_c = 0.0;
    double residual = 0.0;         // RMS in ln P
    bool t_c_unconstrained = false;
    int points = 0;
    double ratio() const { return gamma_late / gamma_early; }
};

// Continuous two-segment fit of ln P(t) anchored at the first point in the window.
PiecewiseExpFit fit_piecewise(const Series& s, Window w = {}, int min_points = 6);
double piecewise_model(const PiecewiseExpFit& f, double t, double t0);

enum class BeatForm {
    decaying_amplitude,     // |α_t e^{-iωt} + (1 - α_0)|^2, α_t = α_∞ + (α_0 - α_∞) e^{-3Γ t/2}
    dissipative_vs_bound,   // |α_0 e^{-iωt - Γt/2} + (1 - α_0)|^2
};

struct BeatOptions {
    std::optional<double> gamma;  // fixed damping; fitted when absent (dissipative form)
    double gamma1 = 0.0;          // Γ_1 entering the decaying-amplitude envelope
    double omega_min = 0.0;       // multi-start grid bounds; 0 picks from the data
    double omega_max = 0.0;
    int grid = 24;
    int max_iterations = 400;
};

struct BeatFit {
    BeatForm form = BeatForm::decaying_amplitude;
    cplx alpha0 = 0.0;
    cplx alpha_inf = 0.0;
    double omega = 0.0;
    double gamma = 0.0;
    bool gamma_fixed = false;
    double residual = 0.0;  // Σ (y - model)^2
    bool converged = false;
    bool omega_unidentifiable = false;
    int iterations = 0;
};

double beat_model(const BeatFit& f, double t);
BeatFit fit_beat(const Series& s, BeatForm form, const BeatOptions& opt = {});

struct ChiSquareReport {
    std::vector<int> candidates;
    std::vector<double> chi2;
    double chi0 = 0.0;
    int dof = 0;
    int best_M = 0;
    std::vector<double> normalized() const;  // χ² / χ0²
};

struct DataPoints {
    std::vector<double> value;
    std::vector<double> sigma;
};

// Generator maps M to model predictions on the same points as the data.
using ScenarioGenerator = std::function<std::vector<double>(int M)>;

ChiSquareReport select_array_size(const DataPoints& data, const std::vector<int>& candidates,
                                  const ScenarioGenerator& generator);
double chi_square(const DataPoints& data, const std::vector<double>& model);

std::string to_string(BeatForm f);
BeatForm beat_form_from_string(const std::string& s);

}  // namespace mwqed::analysis
