#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "mwqed/analysis.hpp"
#include "mwqed/cli.hpp"
#include "mwqed/emission_rates.hpp"
#include "mwqed/errors.hpp"
#include "mwqed/lattice.hpp"
#include "mwqed/master_equation.hpp"
#include "mwqed/single_excitation.hpp"
#include "mwqed/spectral.hpp"

#ifndef MWQED_VERSION
#define MWQED_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace mwqed::cli {

std::string code_version() { return MWQED_VERSION; }

namespace {

struct Context {
    Json cfg;
    RunOptions opt;
    fs::path config_dir;
    lattice::LatticeParams p;
    rates::DriveParams drive;
    int digits = 12;
    OutputSet files;
    Json derived = Json::object();
    Json diagnostics = Json::object();
    std::vector<std::string> warnings;
    bool figures = true;
};

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

lattice::LatticeParams lattice_from(const Json& l) {
    lattice::SiOverrides o;
    const Json& si = l["si"];
    o.lambda_z = si["lambda_z_nm"].get<double>() * 1e-9;
    o.lambda_perp = si["lambda_perp_nm"].get<double>() * 1e-9;
    o.mass = si["mass_amu"].get<double>() * codata::amu;
    o.gravity = si["gravity_m_s2"].get<double>();
    if (!si["omega_z_hz"].is_null()) o.omega_z = 2.0 * pi * si["omega_z_hz"].get<double>();
    return lattice::derive_params(l["s_z"].get<double>(), l["s_perp"].get<double>(), o);
}

sx::KGrid grid_from(const Json& model) {
    sx::KGrid g;
    g.box_length = model["box_length_sites"].get<double>();
    g.k_cutoff = model["k_cutoff_over_kr"].get<double>();
    return g;
}

void add_png(Context& ctx, const std::string& name, const Image& img) {
    if (!ctx.figures || img.width == 0) return;
    const std::string bytes = encode_png(img);
    if (!bytes.empty()) ctx.files.add(name, bytes);
}

// derived constants recorded in every manifest
void derive(Context& ctx) {
    auto& d = ctx.derived;
    const double delta = ctx.drive.delta();
    d["omega_r_rad_s"] = ctx.p.si.omega_r;
    d["k_r_per_m"] = ctx.p.si.k_r;
    d["omega_ho"] = ctx.p.omega_ho;
    d["max_free_time_ms"] = ctx.p.si.ms(ctx.p.max_free_time());
    if (delta >= 0.0) {
        const auto disp = lattice::dispersion(delta);
        d["k_resonant"] = disp.k_resonant;
        d["k_tilde"] = disp.k_tilde;
        d["band_index"] = disp.band_index;
        d["v_g"] = disp.v_g;
    }
    if (delta > 0.0 && ctx.p.s_z > 0.0) {
        const double g1 = rates::gamma_single(ctx.p, ctx.drive);
        d["gamma_1"] = g1;
        d["gamma_1_khz"] = ctx.p.si.khz(g1);
        d["eta"] = rates::retardation(ctx.p, ctx.drive);
        d["d_over_v_g_us"] = ctx.p.si.us(ctx.p.d / (2.0 * std::sqrt(delta)));
    }
}

std::vector<double> pulse_grid(const Context& ctx) {
    const double T = ctx.drive.pulse_duration();
    if (!(T > 0.0)) throw ConfigError("/drive/pulse_ms", "must be > 0 for time evolution");
    return linspace(0.0, T, ctx.cfg["model"]["time_points"].get<int>());
}

std::vector<size_t> snapshot_indices(size_t n, int count) {
    std::vector<size_t> idx;
    if (count <= 0 || n == 0) return idx;
    for (int s = 0; s < count; ++s) {
        const size_t i = count == 1 ? n - 1 : static_cast<size_t>(std::lround(double(s) * (n - 1) / (count - 1)));
        if (idx.empty() || idx.back() != i) idx.push_back(i);
    }
    return idx;
}

// rendering from CSV so `render` and the producing modes share one path

Image render_sweep(const CsvTable& t, Normalization norm) {
    const auto deltas = t.values("delta");
    const auto phis = t.values("phi");
    const auto n = t.values("n_k");
    // rows grouped as (delta, phi) blocks of k samples
    std::vector<std::vector<double>> rows;
    std::vector<int> panel;
    for (size_t i = 0; i < n.size(); ++i) {
        if (i == 0 || deltas[i] != deltas[i - 1] || phis[i] != phis[i - 1]) {
            rows.emplace_back();
            panel.push_back(panel.empty() ? 0 : panel.back() + (deltas[i] != deltas[i - 1]));
        }
        rows.back().push_back(n[i]);
    }
    if (rows.empty()) return heatmap({}, norm);
    // each Δ panel normalized on its own, with a blank row between panels
    std::vector<std::vector<double>> out;
    for (size_t a = 0; a < rows.size();) {
        size_t b = a;
        double m = 0.0;
        while (b < rows.size() && panel[b] == panel[a]) {
            for (double v : rows[b]) m = std::max(m, v);
            ++b;
        }
        if (!out.empty()) out.emplace_back(rows[a].size(), 0.0);
        for (size_t r = a; r < b; ++r) {
            std::vector<double> row = rows[r];
            if (norm == Normalization::per_row && m > 0.0)
                for (double& v : row) v /= m;
            out.push_back(row);
        }
        a = b;
    }
    return heatmap(out, Normalization::global, 2, 3);
}

Image render_spacetime(const CsvTable& t, const std::vector<int>& sites, double v_g_sites, bool cones) {
    const auto tm = t.values("t_omega_r");
    const auto z = t.values("z_sites");
    const auto n = t.values("n_z");
    std::vector<std::vector<double>> rows;
    std::vector<double> times;
    for (size_t i = 0; i < n.size(); ++i) {
        if (i == 0 || tm[i] != tm[i - 1]) {
            rows.emplace_back();
            times.push_back(tm[i]);
        }
        rows.back().push_back(n[i]);
    }
    Image img = heatmap(rows, Normalization::per_row, 2, 2);
    if (img.width == 0 || !cones || rows.front().size() < 2) return img;
    const size_t nz = rows.front().size();
    const double z0 = z.front(), z1 = z[nz - 1];
    for (size_t r = 0; r < times.size(); ++r)
        for (int j : sites)
            for (int sgn : {-1, 1}) {
                const double zz = j + sgn * v_g_sites * times[r];
                if (zz < z0 || zz > z1) continue;
                overlay_point(img, (zz - z0) / (z1 - z0) * (nz - 1), double(r), 2, 2);
            }
    return img;
}

Image render_series(const CsvTable& t, const std::string& x, const std::vector<std::string>& ys) {
    std::vector<std::vector<double>> cols;
    for (const auto& y : ys)
        if (t.column(y) >= 0) cols.push_back(t.values(y));
    return lineout(t.values(x), cols);
}

Image render_q_map(const CsvTable& t, const std::string& col) {
    const auto tm = t.values("t_ms");
    const auto n = t.values(col);
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < n.size(); ++i) {
        if (i == 0 || tm[i] != tm[i - 1]) rows.emplace_back();
        rows.back().push_back(n[i]);
    }
    return heatmap(rows, Normalization::per_row, 1, 4);
}

// modes

void run_rates(Context& ctx) {
    const auto& p = ctx.p;
    const auto& d = ctx.drive;
    const int M = ctx.cfg["model"]["sites"].get<int>();
    Csv csv({"quantity", "value", "unit"}, ctx.digits);
    auto put = [&](const std::string& q, double v, const std::string& unit) {
        csv.row_text({q, format_number(v, ctx.digits), unit});
    };
    const double g1 = rates::gamma_single(p, d);
    const auto disp = lattice::dispersion(d.delta());
    const auto coll = rates::gamma_collective_resolved(p, d, {M, 1, d.quasimomentum()});
    const double eta = rates::retardation(p, d);
    put("gamma_1", g1, "omega_r");
    put("gamma_1_khz", p.si.khz(g1), "kHz (gamma = 2 pi f)");
    put("gamma_collective", coll.forward, "omega_r");
    put("gamma_collective_backward", coll.backward, "omega_r");
    put("gamma_collective_mean", coll.mean, "omega_r");
    put("k_resonant", disp.k_resonant, "k_r");
    put("k_tilde", disp.k_tilde, "k_r");
    put("band_index", disp.band_index, "1");
    put("v_g", disp.v_g, "omega_r / k_r");
    put("eta", eta, "1");
    put("d_over_v_g_us", p.si.us(p.d / disp.v_g), "us");
    const auto bloch = lattice::bloch_phase(0.0, p);
    put("tau_bloch_ms", p.si.ms(bloch.tau_B), "ms");
    const auto band = lattice::band_structure(p.s_z);
    const double J = lattice::hubbard_J(band);
    put("hubbard_J", J, "omega_r");
    put("hubbard_J_khz", p.si.khz(J), "kHz");
    if (p.s_z > 0.0) {
        const double U = lattice::hubbard_U(p);
        put("hubbard_U", U, "omega_r");
        put("U_over_J", U / J, "1");
    }
    ctx.files.add("rates.csv", csv.str());
    std::cout << "Gamma_1 = 2pi x " << format_number(p.si.khz(g1), 6) << " kHz (" << format_number(g1, 6)
              << " omega_r)\n"
              << "eta = " << format_number(eta, 6) << "\n";
}

void run_evolve(Context& ctx) {
    const auto& model_cfg = ctx.cfg["model"];
    const auto t = pulse_grid(ctx);
    lattice::check_free_time(ctx.p, t.back());
    const double scale = ctx.cfg["output"]["population_scale"].get<double>();
    const int M = model_cfg["sites"].get<int>();

    if (model_cfg["method"] == "spectral") {
        if (M != 3) throw ConfigError("/model/sites", "the spectral method covers the 3-site even sector only");
        if (model_cfg["initial_state"] != "tds" || ctx.drive.phase_lag() != 0.0)
            throw ConfigError("/model/method", "the spectral method needs a q = 0 timed-Dicke start");
        const auto poles = spectral::find_poles(ctx.p, ctx.drive, spectral::default_search_region(ctx.drive));
        const auto ev = spectral::evolve_spectral(ctx.p, ctx.drive, t, poles.modes);
        Csv csv({"t_ms", "t_omega_r", "P_excited", "site_-1", "site_0", "site_1"}, ctx.digits);
        for (size_t i = 0; i < t.size(); ++i)
            csv.row({ctx.p.si.ms(t[i]), t[i], scale * ev.excited_fraction[i], std::norm(ev.sites[i][0]),
                     std::norm(ev.sites[i][1]), std::norm(ev.sites[i][2])});
        ctx.files.add("evolve.csv", csv.str());
        ctx.diagnostics["cut_error"] = ev.cut_error;
        if (ctx.figures) add_png(ctx, "evolve.png", render_series(parse_csv(csv.str()), "t_ms", {"P_excited"}));
        return;
    }

    const sx::KGrid grid = grid_from(model_cfg);
    const auto model = sx::build_model(ctx.p, ctx.drive, M, grid);
    const auto init = model_cfg["initial_state"] == "tds"
                          ? sx::InitialState::tds(ctx.drive.quasimomentum())
                          : sx::InitialState::localized(model_cfg["localized_site"].get<int>());
    const auto tr = sx::evolve(model, init, t);
    ctx.diagnostics["max_norm_drift"] = tr.max_norm_drift;
    ctx.diagnostics["modes"] = model.n_modes();

    std::vector<std::string> head = {"t_ms", "t_omega_r", "P_excited", "P_plus", "P_minus"};
    for (int j : model.sites) head.push_back("site_" + std::to_string(j));
    Csv csv(head, ctx.digits);
    for (const auto& s : tr.states) {
        const auto dir = sx::directional_populations(s, grid);
        std::vector<double> row = {ctx.p.si.ms(s.t), s.t, scale * sx::excited_fraction(s), dir.P_plus, dir.P_minus};
        for (int a = 0; a < model.n_sites(); ++a) row.push_back(std::norm(s.A(a)));
        csv.row(row);
    }
    ctx.files.add("evolve.csv", csv.str());

    const double sigma = model_cfg["sigma_k"].get<double>();
    Csv mom({"t_ms", "t_omega_r", "k", "n_k"}, ctx.digits);
    for (size_t i : snapshot_indices(tr.states.size(), ctx.cfg["output"]["snapshots"].get<int>())) {
        const auto d = sx::momentum_distribution(tr.states[i], grid, sigma);
        for (size_t m = 0; m < d.x.size(); ++m)
            mom.row({ctx.p.si.ms(tr.states[i].t), tr.states[i].t, d.x[m], d.density[m]});
    }
    ctx.files.add("momentum.csv", mom.str());

    const double zr = ctx.cfg["output"]["z_range_sites"].get<double>();
    const auto zs = linspace(-zr, zr, ctx.cfg["output"]["z_points"].get<int>());
    std::vector<double> z;
    for (double v : zs) z.push_back(v * ctx.p.d);
    Csv st({"t_ms", "t_omega_r", "z_sites", "n_z"}, ctx.digits);
    for (const auto& s : tr.states) {
        const auto d = sx::position_distribution(s, grid, z);
        for (size_t m = 0; m < z.size(); ++m) st.row({ctx.p.si.ms(s.t), s.t, zs[m], d.density[m]});
    }
    ctx.files.add("spacetime.csv", st.str());
    ctx.derived["emitter_sites"] = model.sites;
    ctx.derived["v_g_sites"] = 2.0 * std::sqrt(std::max(ctx.drive.delta(), 0.0)) / ctx.p.d;

    if (ctx.figures) {
        add_png(ctx, "evolve.png", render_series(parse_csv(csv.str()), "t_ms", {"P_excited", "P_plus", "P_minus"}));
        add_png(ctx, "spacetime.png",
                render_spacetime(parse_csv(st.str()), model.sites, ctx.derived["v_g_sites"].get<double>(), true));
    }
}

void run_sweep(Context& ctx) {
    const auto& sw = ctx.cfg["sweep"];
    sx::SweepSpec spec;
    const double d0 = sw["delta_min"].get<double>(), d1 = sw["delta_max"].get<double>();
    const double step = sw["delta_step"].get<double>();
    const int nd = static_cast<int>(std::floor((d1 - d0) / step + 1e-9)) + 1;
    for (int i = 0; i < nd; ++i) spec.deltas.push_back(d0 + i * step);
    const int nphi = sw["phi_count"].get<int>();
    for (int i = 0; i < nphi; ++i) spec.phis.push_back(2.0 * pi * (i - nphi / 2) / nphi);
    spec.M = sw["sites"].get<int>();
    spec.omega_rabi = sw["omega_over_omega_r"].get<double>();
    spec.t_pulse = ctx.p.si.from_ms(sw["t_ms"].get<double>());
    spec.grid = grid_from(ctx.cfg["model"]);
    spec.grid.k_cutoff = sw["k_cutoff_over_kr"].get<double>();
    spec.sigma_k = ctx.cfg["model"]["sigma_k"].get<double>();
    spec.k_out = linspace(-spec.grid.k_cutoff, spec.grid.k_cutoff, sw["k_points"].get<int>());
    spec.threads = std::max(1, ctx.opt.threads);
    for (double dl : spec.deltas)
        if (!(dl > 0.0)) throw PhysicsError("sweep detunings must lie above the continuum edge");
    for (double dl : spec.deltas) spec.grid.validate(ctx.p, rates::DriveParams(spec.omega_rabi, dl));

    const auto map = sx::sweep_emission_map(ctx.p, spec);
    Csv cells({"delta", "phi", "q", "P_plus", "P_minus", "emitted"}, ctx.digits);
    Csv nk({"delta", "phi", "k", "n_k"}, ctx.digits);
    for (size_t i = 0; i < map.deltas.size(); ++i)
        for (size_t j = 0; j < map.phis.size(); ++j) {
            const auto& c = map.at(i, j);
            cells.row({c.delta, c.phi, c.phi / pi, c.P_plus, c.P_minus, c.emitted});
            for (size_t a = 0; a < map.k_out.size(); ++a) nk.row({c.delta, c.phi, map.k_out[a], c.n_k[a]});
        }
    Csv centers({"delta", "center_q", "expected_q", "deviation"}, ctx.digits);
    double worst = 0.0;
    for (size_t i = 0; i < map.deltas.size(); ++i) {
        const double expected = lattice::fold_quasimomentum(-std::sqrt(map.deltas[i]));
        centers.row({map.deltas[i], map.center_q[i], expected, map.center_deviation[i]});
        worst = std::max(worst, std::abs(map.center_deviation[i]));
    }
    ctx.diagnostics["max_center_deviation"] = worst;
    ctx.files.add("sweep.csv", cells.str());
    ctx.files.add("sweep_nk.csv", nk.str());
    ctx.files.add("sweep_centers.csv", centers.str());
    if (ctx.figures) add_png(ctx, "sweep.png", render_sweep(parse_csv(nk.str()), Normalization::per_row));
    std::cout << "sweep: " << map.deltas.size() << " x " << map.phis.size()
              << " cells, max center deviation " << format_number(worst, 4) << " k_r\n";
}

void run_master(Context& ctx) {
    const auto& mc = ctx.cfg["master"];
    master::SiteRegister reg;
    const double th = mc["mixing_angle"].get<double>();
    for (const auto& s : mc["register"]) {
        const std::string k = s.get<std::string>();
        if (k == "empty") reg.sites.push_back(master::LocalState::vacancy());
        else if (k == "r") reg.sites.push_back(master::LocalState::red());
        else if (k == "g") reg.sites.push_back(master::LocalState::green());
        else reg.sites.push_back(master::LocalState::superposition(std::cos(th / 2), std::sin(th / 2)));
    }
    const int n = reg.size();
    const auto couplings = master::compute_couplings(ctx.p, ctx.drive, n - 1);
    master::MasterOptions mo;
    mo.delta_g = mc["delta_g"].get<double>();
    mo.include_lamb_shift = mc["lamb_shift"].get<bool>();
    mo.rtol = mc["rtol"].get<double>();
    const double T = ctx.p.si.from_ms(mc["t_ms"].get<double>());
    lattice::check_free_time(ctx.p, T);
    const auto t = linspace(0.0, T, mc["time_points"].get<int>());
    const auto tr = master::evolve_master(reg, couplings, t, mo);
    const auto q = master::default_q_grid(ctx.cfg["model"]["q_grid"].get<int>());
    const auto ob = master::observables_master(tr, ctx.cfg["model"]["sigma_k"].get<double>(), q);
    const double scale = ctx.cfg["output"]["population_scale"].get<double>();

    Csv csv({"t_ms", "t_omega_r", "N_r", "N_g", "g_c0_minus_c1", "g_c1_minus_c0", "r_c0_minus_c1", "r_c1_minus_c0"},
            ctx.digits);
    for (size_t i = 0; i < ob.t.size(); ++i) {
        const auto vg = master::visibility(q, ob.n_g[i]);
        const auto vr = master::visibility(q, ob.n_r[i]);
        csv.row({ctx.p.si.ms(ob.t[i]), ob.t[i], scale * ob.N_r[i], ob.N_g[i], vg.c0_minus_c1(), vg.c1_minus_c0(),
                 vr.c0_minus_c1(), vr.c1_minus_c0()});
    }
    Csv nq({"t_ms", "q", "n_r", "n_g"}, ctx.digits);
    for (size_t i = 0; i < ob.t.size(); ++i)
        for (size_t a = 0; a < q.size(); ++a) nq.row({ctx.p.si.ms(ob.t[i]), q[a], ob.n_r[i][a], ob.n_g[i][a]});
    ctx.files.add("master.csv", csv.str());
    ctx.files.add("master_nq.csv", nq.str());

    auto& dg = ctx.diagnostics;
    dg["max_trace_error"] = tr.max_trace_error;
    dg["max_hermiticity_error"] = tr.max_hermiticity_error;
    dg["min_eigenvalue"] = tr.min_eigenvalue;
    dg["max_ng_drift"] = tr.max_ng_drift;
    dg["steps"] = tr.steps;
    dg["gamma_n"] = couplings.gamma_n;
    dg["j_n"] = couplings.j_n;
    dg["validity_horizon_ms"] = 0.2;
    if (mc["t_ms"].get<double>() > 0.2) ctx.warnings.push_back("master run extends past the 0.2 ms validity horizon");
    if (ctx.figures) add_png(ctx, "master_ng.png", render_q_map(parse_csv(nq.str()), "n_g"));
}

void run_spectrum(Context& ctx) {
    const auto& sc = ctx.cfg["spectrum"];
    auto region = spectral::default_search_region(ctx.drive);
    if (!sc["re_min"].is_null()) region.re_min = sc["re_min"].get<double>();
    if (!sc["re_max"].is_null()) region.re_max = sc["re_max"].get<double>();
    if (!sc["im_min"].is_null()) region.im_min = sc["im_min"].get<double>();
    if (!sc["im_max"].is_null()) region.im_max = sc["im_max"].get<double>();
    spectral::PoleSearchOptions po;
    po.cut_angle = sc["cut_angle"].get<double>();
    const auto res = spectral::find_poles(ctx.p, ctx.drive, region, po);
    for (const auto& f : res.failures) ctx.warnings.push_back(f);

    Csv csv({"label", "class", "retained", "sheet", "re_omega", "im_omega", "re_omega_khz", "im_omega_khz",
             "re_zeta", "im_zeta", "norm2", "site0_abs2", "residual"},
            ctx.digits);
    auto f = [&](double v) { return format_number(v, ctx.digits); };
    for (const auto& m : res.modes) {
        double n2 = 0.0;
        for (const auto& a : m.amplitudes) n2 += std::norm(a);
        csv.row_text({m.label, spectral::to_string(m.cls), m.retained ? "1" : "0",
                      std::to_string(spectral::SheetPoint{m.zeta}.sheet()), f(m.omega.real()), f(m.omega.imag()),
                      f(ctx.p.si.khz(m.omega.real())), f(ctx.p.si.khz(m.omega.imag())), f(m.zeta.real()),
                      f(m.zeta.imag()), f(n2), f(std::norm(m.amplitudes[1])), f(m.residual)});
    }
    ctx.files.add("poles.csv", csv.str());
    ctx.diagnostics["poles"] = res.modes.size();

    if (sc["reconstruct"].get<bool>() && ctx.drive.pulse_duration() > 0.0) {
        const auto t = pulse_grid(ctx);
        const auto ev = spectral::evolve_spectral(ctx.p, ctx.drive, t, res.modes, po.cut_angle);
        Csv rc({"t_ms", "t_omega_r", "P_excited", "re_I1", "im_I1", "re_I2", "im_I2"}, ctx.digits);
        for (size_t i = 0; i < t.size(); ++i)
            rc.row({ctx.p.si.ms(t[i]), t[i], ev.excited_fraction[i], ev.I1[i].real(), ev.I1[i].imag(),
                    ev.I2[i].real(), ev.I2[i].imag()});
        ctx.files.add("reconstruction.csv", rc.str());
        ctx.diagnostics["cut_error"] = ev.cut_error;
        ctx.diagnostics["completeness_error"] =
            std::abs(ev.completeness_I1 - 1.0) + std::abs(ev.completeness_I2);
    }

    if (ctx.figures) {
        const int n = sc["grid_points"].get<int>();
        std::vector<std::vector<std::complex<double>>> vals(n, std::vector<std::complex<double>>(n));
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const double re = region.re_min + (region.re_max - region.re_min) * (x + 0.5) / n;
                const double im = region.im_max - (region.im_max - region.im_min) * (y + 0.5) / n;
                const std::complex<double> z(re, im);
                // F = zeta^2 det G shares the zeros of det G away from zeta = 0
                vals[y][x] = spectral::entire_det(z, ctx.p, ctx.drive).value / (z * z);
            }
        add_png(ctx, "spectrum.png", domain_coloring(vals));
    }
    for (const auto& m : res.modes)
        std::cout << m.label << "  omega = " << format_number(m.omega.real(), 6) << (m.omega.imag() < 0 ? " - " : " + ")
                  << format_number(std::abs(m.omega.imag()), 6) << "i omega_r\n";
}

void run_fit(Context& ctx) {
    const auto& fc = ctx.cfg["fit"];
    const std::string input = fc["input"].get<std::string>();
    if (input.empty()) throw ConfigError("/fit/input", "an input CSV is required");
    fs::path path(input);
    if (path.is_relative()) path = ctx.config_dir / path;
    const CsvTable table = read_csv(path.string());
    auto tcol = table.values(fc["t_column"].get<std::string>());
    const auto y = table.values(fc["y_column"].get<std::string>());
    const bool in_ms = fc["t_column"].get<std::string>() == "t_ms";
    for (double& v : tcol) v = in_ms ? ctx.p.si.from_ms(v) : v;
    const double g1 = ctx.drive.delta() > 0.0 ? rates::gamma_single(ctx.p, ctx.drive) : 0.0;

    Json rep = Json::object();
    const std::string kind = fc["kind"].get<std::string>();
    rep["kind"] = kind;
    rep["input"] = input;
    if (kind == "piecewise") {
        analysis::Window w{ctx.p.si.from_ms(fc["window_ms"][0].get<double>()),
                           ctx.p.si.from_ms(fc["window_ms"][1].get<double>())};
        const auto f = analysis::fit_piecewise({tcol, y}, w, fc["min_points"].get<int>());
        rep["gamma_early"] = f.gamma_early;
        rep["gamma_late"] = f.gamma_late;
        rep["sigma_gamma_early"] = f.sigma_gamma_early;
        rep["sigma_gamma_late"] = f.sigma_gamma_late;
        rep["ratio_late_over_early"] = f.ratio();
        if (g1 > 0.0) {
            rep["gamma_early_over_gamma_1"] = f.gamma_early / g1;
            rep["gamma_late_over_gamma_1"] = f.gamma_late / g1;
        }
        rep["t_c_us"] = ctx.p.si.us(f.t_c);
        rep["sigma_t_c_us"] = ctx.p.si.us(f.sigma_t_c);
        rep["t_c_unconstrained"] = f.t_c_unconstrained;
        rep["rms_log_residual"] = f.residual;
        rep["points"] = f.points;
        std::cout << "gamma_late / gamma_early = " << format_number(f.ratio(), 4) << ", t_c = "
                  << format_number(ctx.p.si.us(f.t_c), 4) << " us\n";
    } else if (kind == "beat") {
        analysis::BeatOptions bo;
        if (!fc["gamma_over_omega_r"].is_null()) bo.gamma = fc["gamma_over_omega_r"].get<double>();
        bo.gamma1 = g1;
        const auto form = analysis::beat_form_from_string(fc["form"].get<std::string>());
        const auto f = analysis::fit_beat({tcol, y}, form, bo);
        rep["form"] = analysis::to_string(form);
        rep["alpha0"] = {f.alpha0.real(), f.alpha0.imag()};
        rep["alpha_inf"] = {f.alpha_inf.real(), f.alpha_inf.imag()};
        rep["abs2_alpha0"] = std::norm(f.alpha0);
        rep["abs2_alpha_inf"] = std::norm(f.alpha_inf);
        rep["abs2_one_minus_alpha0"] = std::norm(1.0 - f.alpha0);
        rep["omega"] = f.omega;
        rep["omega_khz"] = ctx.p.si.khz(f.omega);
        rep["gamma"] = f.gamma;
        rep["gamma_fixed"] = f.gamma_fixed;
        rep["residual"] = f.residual;
        rep["omega_unidentifiable"] = f.omega_unidentifiable;
        std::cout << "omega = " << format_number(f.omega, 6) << " omega_r (2pi x "
                  << format_number(ctx.p.si.khz(f.omega), 4) << " kHz)\n";
    } else {
        const auto sig = table.values(fc["sigma_column"].get<std::string>());
        analysis::DataPoints data{y, sig};
        const sx::KGrid grid = grid_from(ctx.cfg["model"]);
        const double q = ctx.drive.quasimomentum();
        std::vector<int> cands;
        for (const auto& c : fc["candidates"]) cands.push_back(c.get<int>());
        const auto r = analysis::select_array_size(data, cands, [&](int M) {
            const auto model = sx::build_model(ctx.p, ctx.drive, M, grid);
            std::vector<double> order(tcol), out(tcol.size());
            std::vector<size_t> idx(tcol.size());
            for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return tcol[a] < tcol[b]; });
            for (size_t i = 0; i < idx.size(); ++i) order[i] = tcol[idx[i]];
            const auto tr = sx::evolve(model, sx::InitialState::tds(q), order);
            for (size_t i = 0; i < idx.size(); ++i) out[idx[i]] = sx::excited_fraction(tr.states[i]);
            return out;
        });
        rep["candidates"] = r.candidates;
        rep["chi2"] = r.chi2;
        rep["chi2_normalized"] = r.normalized();
        rep["chi0"] = r.chi0;
        rep["dof"] = r.dof;
        rep["best_M"] = r.best_M;
        std::cout << "best M = " << r.best_M << "\n";
    }
    ctx.files.add("fit.json", rep.dump(2) + "\n");
}

void run_render(Context& ctx) {
    const auto& rc = ctx.cfg["render"];
    std::string dir = rc["input_dir"].get<std::string>();
    if (dir.empty()) throw ConfigError("/render/input_dir", "an input directory is required");
    fs::path in(dir);
    if (in.is_relative()) in = ctx.config_dir / in;
    const Normalization norm = rc["normalization"] == "global" ? Normalization::global : Normalization::per_row;
    ctx.figures = true;
    int drawn = 0;
    auto have = [&](const char* f) { return fs::exists(in / f); };
    if (have("sweep_nk.csv")) {
        add_png(ctx, "sweep.png", render_sweep(read_csv((in / "sweep_nk.csv").string()), norm));
        ++drawn;
    }
    if (have("evolve.csv")) {
        add_png(ctx, "evolve.png",
                render_series(read_csv((in / "evolve.csv").string()), "t_ms", {"P_excited", "P_plus", "P_minus"}));
        ++drawn;
    }
    if (have("spacetime.csv")) {
        std::vector<int> sites;
        double v = 0.0;
        if (have("manifest.json")) {
            std::ifstream mf(in / "manifest.json");
            try {
                const Json m = Json::parse(mf);
                if (m["derived"].contains("emitter_sites")) sites = m["derived"]["emitter_sites"].get<std::vector<int>>();
                if (m["derived"].contains("v_g_sites")) v = m["derived"]["v_g_sites"].get<double>();
            } catch (const std::exception&) {
                ctx.warnings.push_back("render: unreadable manifest, light cones omitted");
            }
        }
        add_png(ctx, "spacetime.png",
                render_spacetime(read_csv((in / "spacetime.csv").string()), sites, v, rc["light_cones"].get<bool>()));
        ++drawn;
    }
    if (have("master_nq.csv")) {
        add_png(ctx, "master_ng.png", render_q_map(read_csv((in / "master_nq.csv").string()), "n_g"));
        ++drawn;
    }
    if (have("master.csv")) {
        add_png(ctx, "master.png",
                render_series(read_csv((in / "master.csv").string()), "t_ms", {"g_c0_minus_c1", "N_r"}));
        ++drawn;
    }
    if (drawn == 0) warn("render: no gridded data found in '" + in.string() + "'");
    if (!png_available()) warn("render: built without libpng, no images written");
}

void write_manifest(const Context& ctx, const std::string& status, const std::string& error,
                    const std::map<std::string, std::string>& digests) {
    Json m = Json::object();
    m["manifest_version"] = 1;
    m["code_version"] = code_version();
    m["mode"] = ctx.opt.subcommand;
    m["status"] = status;
    if (!error.empty()) m["error"] = error;
    m["config"] = ctx.cfg;
    m["derived"] = ctx.derived;
    m["diagnostics"] = ctx.diagnostics;
    m["warnings"] = ctx.warnings;
    Json out = Json::object();
    for (const auto& [k, v] : digests) out[k] = {{"sha256", v}};
    m["outputs"] = out;
    fs::create_directories(ctx.opt.out_dir);
    write_atomic((fs::path(ctx.opt.out_dir) / "manifest.json").string(), m.dump(2) + "\n");
}

}  // namespace

int run(const RunOptions& opt) {
    Context ctx;
    ctx.opt = opt;
    try {
        if (std::find(modes().begin(), modes().end(), opt.subcommand) == modes().end())
            throw ConfigError("/mode", "unknown subcommand '" + opt.subcommand + "'");
        if (opt.config_path.empty()) throw ConfigError("/", "--config is required");
        ctx.cfg = load_config(opt.config_path, opt.subcommand);
        ctx.config_dir = fs::path(opt.config_path).parent_path();
        ctx.digits = ctx.cfg["output"]["float_precision"].get<int>();
        ctx.figures = opt.figures;
        // config-level physics validation happens before any file is touched
        ctx.p = lattice_from(ctx.cfg["lattice"]);
        const auto& d = ctx.cfg["drive"];
        ctx.drive = rates::DriveParams(d["omega_over_omega_r"].get<double>(), d["delta_over_omega_r"].get<double>(),
                                       d["phi"].get<double>(), ctx.p.si.from_ms(d["pulse_ms"].get<double>()));
    } catch (const ConfigError& e) {
        std::cerr << "config error at " << e.what() << "\n";
        return exit_config;
    } catch (const PhysicsError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }

    std::mutex wm;
    set_warning_handler([&](const std::string& msg) {
        std::lock_guard lock(wm);
        ctx.warnings.push_back(msg);
        std::cerr << "warning: " << msg << "\n";
    });
    struct Restore {
        ~Restore() { set_warning_handler(nullptr); }
    } restore;

    try {
        derive(ctx);
        const std::string& m = opt.subcommand;
        if (m == "rates") run_rates(ctx);
        else if (m == "evolve") run_evolve(ctx);
        else if (m == "sweep") run_sweep(ctx);
        else if (m == "master") run_master(ctx);
        else if (m == "spectrum") run_spectrum(ctx);
        else if (m == "fit") run_fit(ctx);
        else run_render(ctx);
        if (ctx.figures && !png_available() && opt.subcommand != "render")
            ctx.warnings.push_back("built without libpng, figures skipped");
        const auto digests = ctx.files.commit(opt.out_dir);
        write_manifest(ctx, "ok", "", digests);
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error at " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        try {
            write_manifest(ctx, "error", e.what(), {});
        } catch (const std::exception& e2) {
            std::cerr << "error: could not write manifest: " << e2.what() << "\n";
        }
        return exit_physics;
    }
}

}  // namespace mwqed::cli
