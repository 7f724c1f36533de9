#include "mwqed/emission_rates.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "mwqed/errors.hpp"

namespace mwqed::rates {

double fold_phase(double phi) { return phi - 2.0 * pi * std::ceil((phi - pi) / (2.0 * pi)); }

DriveParams::DriveParams(double omega_rabi, double delta, double phase_lag, double pulse_duration)
    : omega_rabi_(omega_rabi), delta_(delta), phase_lag_(fold_phase(phase_lag)), pulse_duration_(pulse_duration) {
    if (!(omega_rabi >= 0.0)) throw PhysicsError("coupling strength Omega must be >= 0");
    if (!(pulse_duration >= 0.0)) throw PhysicsError("pulse duration must be >= 0");
    if (!std::isfinite(delta)) throw PhysicsError("detuning must be finite");
}

void TimedDickeSpec::validate() const {
    if (M < 1) throw PhysicsError("timed-Dicke state needs M >= 1");
    if (N < 1) throw PhysicsError("timed-Dicke state needs N >= 1");
}

std::vector<int> site_range(int M) {
    std::vector<int> s;
    const int lo = static_cast<int>(std::floor(1.0 - M / 2.0));
    for (int j = lo; j < lo + M; ++j) s.push_back(j);
    return s;
}

double gamma_single(const lattice::LatticeParams& p, const DriveParams& drive) {
    const double delta = drive.delta();
    if (!(delta > 0.0))
        throw PhysicsError("golden-rule rate diverges at or below the continuum edge (delta <= 0); "
                           "use the spectral module");
    const double w = p.omega_ho;
    if (!(w > 0.0)) throw PhysicsError("golden-rule rate needs s_z > 0");
    const double om = drive.omega_rabi();
    return om * om / std::sqrt(delta) * std::sqrt(pi / (2.0 * w)) * std::exp(-2.0 * delta / w);
}

double structure_factor(int M, double q, double k) {
    std::complex<double> s = 0.0;
    for (int j : site_range(M)) s += std::polar(1.0, (q - k) * pi * j);
    return std::norm(s) / (double(M) * M);
}

CollectiveRate gamma_collective_resolved(const lattice::LatticeParams& p, const DriveParams& drive,
                                         const TimedDickeSpec& tds) {
    tds.validate();
    const double g1 = gamma_single(p, drive);
    const double k = std::sqrt(drive.delta());
    const double pref = double(tds.N) * tds.M * g1;
    CollectiveRate r;
    r.forward = pref * structure_factor(tds.M, tds.q, k);
    r.backward = pref * structure_factor(tds.M, tds.q, -k);
    r.mean = 0.5 * (r.forward + r.backward);
    return r;
}

double gamma_collective(const lattice::LatticeParams& p, const DriveParams& drive, const TimedDickeSpec& tds) {
    return gamma_collective_resolved(p, drive, tds).forward;
}

namespace {
std::vector<double> branch(double phi, int n_max, double offset) {
    if (n_max < 0) throw PhysicsError("n_max must be >= 0");
    std::vector<double> out;
    const double x = fold_phase(phi) / pi;
    for (int n = -n_max; n <= n_max; ++n) {
        const double k = x + 2.0 * n + offset;
        out.push_back(k * k);
    }
    std::sort(out.begin(), out.end());
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
    out.erase(std::unique(out.begin(), out.end(), close), out.end());
    return out;
}
}  // namespace

std::vector<double> superradiant_detunings(double phi, int n_max) { return branch(phi, n_max, 0.0); }
std::vector<double> subradiant_detunings(double phi, int n_max) { return branch(phi, n_max, 1.0); }

double retardation(const lattice::LatticeParams& p, const DriveParams& drive) {
    const double g1 = gamma_single(p, drive);
    return p.d * g1 / lattice::dispersion(drive.delta()).v_g;
}

}  // namespace mwqed::rates
