#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>

#include "mwqed/analysis.hpp"
#include "mwqed/errors.hpp"
#include "mwqed/master_equation.hpp"
#include "mwqed/single_excitation.hpp"
#include "mwqed/spectral.hpp"

namespace py = pybind11;
using namespace mwqed;

namespace {

std::vector<double> excited_fraction(const lattice::LatticeParams& p, const rates::DriveParams& d, int M,
                                     const std::vector<double>& t, double q, double box_length, double k_cutoff) {
    const auto model = sx::build_model(p, d, M, sx::KGrid{box_length, k_cutoff});
    const auto tr = sx::evolve(model, sx::InitialState::tds(q), t);
    std::vector<double> out;
    for (const auto& s : tr.states) out.push_back(sx::excited_fraction(s));
    return out;
}

}  // namespace

PYBIND11_MODULE(_mwqed, m) {
    m.doc() = "matter-wave emitter arrays coupled to a 1D continuum";

    py::register_exception<PhysicsError>(m, "PhysicsError", PyExc_ValueError);
    py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

    py::class_<SiUnits>(m, "SiUnits")
        .def_readonly("omega_r", &SiUnits::omega_r)
        .def_readonly("k_r", &SiUnits::k_r)
        .def("ms", &SiUnits::ms)
        .def("us", &SiUnits::us)
        .def("khz", &SiUnits::khz)
        .def("from_ms", &SiUnits::from_ms);

    py::class_<lattice::LatticeParams>(m, "LatticeParams")
        .def_readonly("s_z", &lattice::LatticeParams::s_z)
        .def_readonly("s_perp", &lattice::LatticeParams::s_perp)
        .def_readonly("d", &lattice::LatticeParams::d)
        .def_readonly("omega_ho", &lattice::LatticeParams::omega_ho)
        .def_readonly("si", &lattice::LatticeParams::si)
        .def("a_ho", &lattice::LatticeParams::a_ho)
        .def("max_free_time", &lattice::LatticeParams::max_free_time);
    m.def("derive_params", [](double s_z, double s_perp) { return lattice::derive_params(s_z, s_perp); },
          py::arg("s_z"), py::arg("s_perp"));

    py::class_<lattice::BandStructure>(m, "BandStructure")
        .def_readonly("q", &lattice::BandStructure::q)
        .def_readonly("epsilon", &lattice::BandStructure::epsilon);
    m.def("band_structure", &lattice::band_structure, py::arg("s_z"), py::arg("n_q") = 64, py::arg("cutoff") = 21);
    m.def("hubbard_J", &lattice::hubbard_J);
    m.def("hubbard_U", [](const lattice::LatticeParams& p) { return lattice::hubbard_U(p); });

    py::class_<rates::DriveParams>(m, "DriveParams")
        .def(py::init<double, double, double, double>(), py::arg("omega_rabi"), py::arg("delta"),
             py::arg("phase_lag") = 0.0, py::arg("pulse_duration") = 0.0)
        .def_property_readonly("omega_rabi", &rates::DriveParams::omega_rabi)
        .def_property_readonly("delta", &rates::DriveParams::delta)
        .def_property_readonly("phase_lag", &rates::DriveParams::phase_lag);
    m.def("gamma_single", &rates::gamma_single);
    m.def("structure_factor", &rates::structure_factor);
    m.def("superradiant_detunings", &rates::superradiant_detunings);
    m.def("retardation", &rates::retardation);

    m.def("excited_fraction", &excited_fraction, py::arg("params"), py::arg("drive"), py::arg("sites"), py::arg("t"),
          py::arg("q") = 0.0, py::arg("box_length") = 400.0, py::arg("k_cutoff") = 6.0,
          "Excited fraction of a timed-Dicke array at the requested times.");

    m.def("cerfc", &spectral::cerfc);
    m.def("faddeeva_w", &spectral::faddeeva_w);
    m.def(
        "gtilde",
        [](int n, std::complex<double> omega, const lattice::LatticeParams& p, const rates::DriveParams& d) {
            return spectral::gtilde(n, spectral::SheetPoint::physical(omega), p, d);
        },
        "Bath transform at separation n on the physical sheet.");
    m.def(
        "find_poles",
        [](const lattice::LatticeParams& p, const rates::DriveParams& d) {
            const auto res = spectral::find_poles(p, d, spectral::default_search_region(d));
            py::list out;
            for (const auto& md : res.modes) {
                py::dict row;
                row["label"] = md.label;
                row["omega"] = md.omega;
                row["zeta"] = md.zeta;
                row["retained"] = md.retained;
                row["amplitudes"] = std::vector<std::complex<double>>(md.amplitudes.begin(), md.amplitudes.end());
                out.append(row);
            }
            return out;
        },
        "Poles of the three-emitter propagator as a list of dicts.");

    py::class_<master::CouplingMatrix>(m, "CouplingMatrix")
        .def_readonly("gamma", &master::CouplingMatrix::gamma)
        .def_readonly("j_shift", &master::CouplingMatrix::j_shift)
        .def_readonly("gamma_n", &master::CouplingMatrix::gamma_n)
        .def_readonly("j_n", &master::CouplingMatrix::j_n);
    m.def("compute_couplings", &master::compute_couplings, py::arg("params"), py::arg("drive"),
          py::arg("max_separation"), py::arg("n_sites") = -1);

    py::class_<analysis::PiecewiseExpFit>(m, "PiecewiseExpFit")
        .def_readonly("gamma_early", &analysis::PiecewiseExpFit::gamma_early)
        .def_readonly("gamma_late", &analysis::PiecewiseExpFit::gamma_late)
        .def_readonly("t_c", &analysis::PiecewiseExpFit::t_c)
        .def_readonly("t_c_unconstrained", &analysis::PiecewiseExpFit::t_c_unconstrained)
        .def("ratio", &analysis::PiecewiseExpFit::ratio);
    m.def(
        "fit_piecewise",
        [](std::vector<double> t, std::vector<double> y, double t_min, double t_max, int min_points) {
            return analysis::fit_piecewise({std::move(t), std::move(y)}, {t_min, t_max}, min_points);
        },
        py::arg("t"), py::arg("y"), py::arg("t_min") = 0.0, py::arg("t_max") = 0.0, py::arg("min_points") = 6);
}
