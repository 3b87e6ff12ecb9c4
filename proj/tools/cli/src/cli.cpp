#include "kslight_cli/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <kslight/coupler.hpp>
#include <kslight/errors.hpp>
#include <kslight/fitting.hpp>
#include <kslight/fock_state.hpp>
#include <kslight/homodyne.hpp>
#include <kslight/io.hpp>
#include <kslight/quadrature.hpp>
#include <kslight/reconstruction.hpp>
#include <kslight/weak.hpp>

#include "kslight_cli/state_spec.hpp"

namespace kslight::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr double kPiC = 3.14159265358979323846;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Output {
    fs::path path;
    std::string content;
};

struct RunResult {
    std::vector<Output> outputs;
    std::vector<std::string> inputs;
    std::optional<std::uint64_t> seed;
    std::string summary;
};

fs::path default_output(const std::string& name) {
    const char* dir = std::getenv("KSLIGHT_OUT_DIR");
    return (dir && *dir) ? fs::path(dir) / name : fs::path(name);
}

fs::path output_path(const std::string& flag_value, const std::string& default_name) {
    return flag_value.empty() ? default_output(default_name) : fs::path(flag_value);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// key=value lines ('#' comments) turned into --key=value arguments, placed
// before the command-line flags so that flags win.
std::vector<std::string> config_arguments(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
        if (key == "config") continue;
        out.push_back("--" + key + "=" + value);
    }
    return out;
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

json matrix_json(const TransferMatrix2& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < 2; ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < 2; ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

json settings_json(const CouplerSettings& s) {
    return json{{"kappa", s.kappa},   {"length", s.length}, {"wavelength", s.wavelength},
                {"delta", s.delta},   {"phi1", s.phi1},     {"phi2", s.phi2},
                {"delta_over_k0", s.delta / s.k0()}};
}

// --- device options shared by sweep / solve / defects -----------------------

struct DeviceFlags {
    double kappa_over_k0 = 0.1;
    double length_mm = 2.0;
    double wavelength_nm = 650.0;

    void add(CLI::App& app) {
        app.add_option("--kappa-over-k0", kappa_over_k0, "coupling coefficient in units of k0");
        app.add_option("--length-mm", length_mm, "coupler length, mm");
        app.add_option("--wavelength-nm", wavelength_nm, "vacuum wavelength, nm");
    }
    [[nodiscard]] CouplerSettings settings() const {
        CouplerSettings s;
        s.wavelength = wavelength_nm * 1e-9;
        s.kappa = kappa_over_k0 * s.k0();
        s.length = length_mm * 1e-3;
        s.validate();
        return s;
    }
};

// --- subcommands ------------------------------------------------------------

using Runner = std::function<RunResult()>;

Runner setup_sweep(CLI::App& app) {
    struct Flags {
        DeviceFlags device;
        double delta_min = 0.0;
        double delta_max = 0.01;
        std::size_t points = 1001;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    f->device.add(app);
    app.add_option("--delta-min", f->delta_min, "lower end of the delta/k0 range");
    app.add_option("--delta-max", f->delta_max, "upper end of the delta/k0 range");
    app.add_option("--points", f->points, "number of sweep points")->check(CLI::Range(2, 100000000));
    app.add_option("--out", f->out, "output CSV (delta_over_k0,A,B,theta)");
    return [f] {
        const auto rows = sweep_response(f->device.settings(), f->delta_min, f->delta_max, f->points);
        std::ostringstream csv;
        write_sweep_csv(csv, rows);
        RunResult r;
        r.outputs.push_back({output_path(f->out, "sweep.csv"), csv.str()});
        r.summary = "sweep: " + std::to_string(rows.size()) + " rows";
        return r;
    };
}

Runner setup_solve(CLI::App& app) {
    struct Flags {
        DeviceFlags device;
        double theta = kPiC / 2.0;
        double phi = 0.0;
        std::optional<double> delta_lo;
        std::optional<double> delta_hi;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    f->device.add(app);
    app.add_option("--theta", f->theta, "target rotation parameter Theta in [0, pi]");
    app.add_option("--phi", f->phi, "target relative phase Phi");
    app.add_option("--delta-lo", f->delta_lo, "search window lower end, rad/m");
    app.add_option("--delta-hi", f->delta_hi, "search window upper end, rad/m");
    app.add_option("--out", f->out, "output JSON");
    return [f] {
        const CouplerSettings base = f->device.settings();
        if (f->delta_lo.has_value() != f->delta_hi.has_value()) {
            throw UsageError("--delta-lo and --delta-hi must be given together");
        }
        const CouplerSettings s = f->delta_lo ? solve_settings(f->theta, f->phi, base, DeltaWindow{*f->delta_lo, *f->delta_hi})
                                              : solve_settings(f->theta, f->phi, base);
        const TransferMatrix2 achieved = su2_matrix(s, f->phi);
        const TransferMatrix2 target = su2_target(f->theta, f->phi);
        const double distance = phase_aligned_distance(achieved, target);
        const CellResponse cell = cell_response(s);
        json j{{"target", {{"theta", f->theta}, {"phi", f->phi}}},
               {"settings", settings_json(s)},
               {"chi", cell.chi},
               {"big_theta", cell.big_theta},
               {"su2_matrix", matrix_json(achieved)},
               {"target_matrix", matrix_json(target)},
               {"transfer_matrix", matrix_json(transfer_matrix(s))},
               {"distance", distance}};
        RunResult r;
        r.outputs.push_back({output_path(f->out, "solve.json"), json_text(j)});
        r.summary = "solve: delta = " + format_double(s.delta) + " rad/m, distance " + format_double(distance);
        return r;
    };
}

Runner setup_defects(CLI::App& app) {
    struct Flags {
        DeviceFlags device;
        double theta = kPiC / 2.0;
        double phi = 0.0;
        double perturb = 0.05;
        double eps1 = 0.01;
        double eps2 = 0.02;
        double eta = kPiC / 4.0;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    f->device.add(app);
    app.add_option("--theta", f->theta, "target Theta");
    app.add_option("--phi", f->phi, "target Phi");
    app.add_option("--perturb", f->perturb, "relative fabrication error applied to kappa and L");
    app.add_option("--eps1", f->eps1, "first 3 dB coupler defect");
    app.add_option("--eps2", f->eps2, "second 3 dB coupler defect");
    app.add_option("--eta", f->eta, "MZI internal phase");
    app.add_option("--out", f->out, "output JSON");
    return [f] {
        const CouplerSettings base = f->device.settings();
        const TransferMatrix2 target = su2_target(f->theta, f->phi);
        json ks = json::array();
        double worst = 0.0;
        for (const char* which : {"kappa", "length"}) {
            for (double sign : {-1.0, 1.0}) {
                CouplerSettings p = base;
                const double scale = 1.0 + sign * f->perturb;
                if (std::string(which) == "kappa") {
                    p.kappa *= scale;
                } else {
                    p.length *= scale;
                }
                const CouplerSettings s = solve_settings(f->theta, f->phi, p);
                const double d = phase_aligned_distance(su2_matrix(s, f->phi), target);
                worst = std::max(worst, d);
                ks.push_back({{"parameter", which}, {"scale", scale}, {"delta", s.delta}, {"distance", d}});
            }
        }
        const DefectMzi defect{f->eps1, f->eps2, f->eta};
        const MziResidual res = mzi_residual(defect);
        json j{{"target", {{"theta", f->theta}, {"phi", f->phi}}},
               {"perturbation", f->perturb},
               {"reversed_delta_beta", {{"recalibrated", ks}, {"max_distance", worst}}},
               {"mzi",
                {{"eps1", f->eps1},
                 {"eps2", f->eps2},
                 {"eta", f->eta},
                 {"first_order_valid", defect.first_order_valid()},
                 {"matrix", matrix_json(defective_mzi(defect))},
                 {"offdiag_imag", res.offdiag_imag},
                 {"diag_imag", res.diag_imag},
                 {"best_output_compensation", mzi_best_output_compensation(defect)}}}};
        RunResult r;
        r.outputs.push_back({output_path(f->out, "defects.json"), json_text(j)});
        r.summary = "defects: recalibrated distance " + format_double(worst) + ", MZI residual " +
                    format_double(res.offdiag_imag);
        return r;
    };
}

struct StateFlags {
    std::string spec;
    std::string file;
    int cutoff = 0;

    void add(CLI::App& app, const std::string& default_spec) {
        spec = default_spec;
        app.add_option("--state", spec, "state spec: coherent:a1_re,a1_im,a2_re,a2_im | noon:N | fock-list:...");
        app.add_option("--state-file", file, "state JSON (overrides --state)");
        app.add_option("--cutoff", cutoff, "minimum Fock cutoff per mode")->check(CLI::Range(0, 200));
    }
    [[nodiscard]] FockState load(std::vector<std::string>& inputs) const {
        if (!file.empty()) {
            inputs.push_back(file);
            FockState s = state_from_json(read_file(file));
            if (cutoff > s.cutoff()) s = s.with_cutoff(cutoff);
            return s;
        }
        return parse_state_spec(spec, cutoff > 0 ? std::optional<int>(cutoff) : std::nullopt);
    }
};

Runner setup_homodyne(CLI::App& app) {
    struct Flags {
        StateFlags state;
        std::string strategy = "phase-random";
        std::size_t samples = 100000;
        std::uint64_t seed = 1;
        std::size_t chi_count = 64;
        double chi_period = kPiC;
        std::size_t psi_count = 8;
        double lo_amplitude = 100.0;
        std::size_t grid_points = 2048;
        std::size_t workers = 1;
        int sign = 1;
        std::string out;
    };
    auto f = std::make_shared<Flags>();
    f->state.add(app, "coherent:4,0,0,4");
    app.add_option("--strategy", f->strategy, "standard | phase-random | full-random")
        ->check(CLI::IsMember({"standard", "phase-random", "full-random"}));
    app.add_option("--samples", f->samples, "number of records")->check(CLI::PositiveNumber);
    app.add_option("--seed", f->seed, "RNG seed");
    app.add_option("--chi-count", f->chi_count, "rotation angles k*period/count")->check(CLI::PositiveNumber);
    app.add_option("--chi-period", f->chi_period, "angular period of the chi grid");
    app.add_option("--psi-count", f->psi_count, "LO phases for the standard strategy")->check(CLI::PositiveNumber);
    app.add_option("--lo-amplitude", f->lo_amplitude, "local-oscillator amplitude");
    app.add_option("--grid-points", f->grid_points, "sampling grid points")->check(CLI::Range(16, 1 << 20));
    app.add_option("--workers", f->workers, "worker threads (output does not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--sign", f->sign, "rotation sign, +1 or -1")->check(CLI::IsMember({-1, 1}));
    app.add_option("--out", f->out, "output CSV (chi,psi,value)");
    return [f] {
        RunResult r;
        const FockState state = f->state.load(r.inputs);
        HomodyneConfig cfg;
        cfg.strategy = parse_strategy(f->strategy);
        cfg.n_samples = f->samples;
        cfg.seed = f->seed;
        cfg.chi_list = uniform_angles(f->chi_count, f->chi_period);
        cfg.psi_list = uniform_angles(f->psi_count, 2.0 * kPiC);
        cfg.lo_amplitude = f->lo_amplitude;
        cfg.grid_points = f->grid_points;
        cfg.workers = f->workers;
        cfg.sign = f->sign;
        const auto records = run_campaign(state, cfg);
        std::ostringstream csv;
        write_records_csv(csv, records);
        r.outputs.push_back({output_path(f->out, "homodyne.csv"), csv.str()});
        r.seed = f->seed;
        r.summary = "homodyne: " + std::to_string(records.size()) + " records (" + std::string(to_string(cfg.strategy)) + ")";
        return r;
    };
}

Runner setup_reconstruct(CLI::App& app) {
    struct Flags {
        std::string in;
        std::string method = "back-projection";
        std::size_t bins = 81;
        double half_width = 0.0;
        bool magnitude = false;
        int sign = 1;
        std::string model = "ring";
        std::string solver = "levenberg-marquardt";
        double max_residual = 0.95;
        bool no_fit = false;
        std::string out;
        std::string fit_out;
    };
    auto f = std::make_shared<Flags>();
    app.add_option("--in", f->in, "record CSV (chi,psi,value)")->required();
    app.add_option("--method", f->method, "scatter | back-projection")->check(CLI::IsMember({"scatter", "back-projection"}));
    app.add_option("--bins", f->bins, "bins per axis")->check(CLI::Range(3, 4096));
    app.add_option("--half-width", f->half_width, "histogram half-width (0: from data)");
    app.add_flag("--magnitude", f->magnitude, "scatter |value| instead of the signed value");
    app.add_option("--sign", f->sign, "rotation sign used in the campaign")->check(CLI::IsMember({-1, 1}));
    app.add_option("--model", f->model, "ring | gaussian")->check(CLI::IsMember({"ring", "gaussian"}));
    app.add_option("--solver", f->solver, "levenberg-marquardt | nelder-mead")
        ->check(CLI::IsMember({"levenberg-marquardt", "nelder-mead"}));
    app.add_option("--max-residual", f->max_residual, "relative residual above which the fit is rejected");
    app.add_flag("--no-fit", f->no_fit, "skip the moment fit");
    app.add_option("--out", f->out, "histogram CSV (e1,e2,density)");
    app.add_option("--fit-out", f->fit_out, "fit report JSON (default: <out>.fit.json)");
    return [f] {
        RunResult r;
        r.inputs.push_back(f->in);
        std::istringstream in(read_file(f->in));
        const auto records = read_records_csv(in);
        ReconstructOptions opt;
        opt.method = parse_method(f->method);
        opt.bins = f->bins;
        if (f->half_width > 0.0) opt.half_width = f->half_width;
        opt.signed_values = !f->magnitude;
        opt.sign = f->sign;
        const Histogram2D hist = reconstruct_joint(records, opt);
        std::ostringstream csv;
        write_histogram_csv(csv, hist);
        const fs::path out = output_path(f->out, "reconstruct.csv");
        r.outputs.push_back({out, csv.str()});
        r.summary = "reconstruct: " + std::to_string(hist.bins) + "x" + std::to_string(hist.bins) + " " +
                    std::string(to_string(hist.method));
        if (!f->no_fit) {
            FitOptions fo;
            fo.model = parse_model(f->model);
            fo.solver = f->solver == "nelder-mead" ? FitSolver::NelderMead : FitSolver::LevenbergMarquardt;
            fo.max_residual = f->max_residual;
            const FitResult fit = fit_moments(hist, fo);
            json j{{"method", to_string(hist.method)},
                   {"model", to_string(fit.model)},
                   {"solver", to_string(fit.solver)},
                   {"mean1", fit.mean1},
                   {"mean2", fit.mean2},
                   {"width1", fit.width1},
                   {"width2", fit.width2},
                   {"amplitude", fit.amplitude},
                   {"residual", fit.residual},
                   {"iterations", fit.iterations},
                   {"records", records.size()},
                   {"dropped", hist.dropped}};
            const fs::path fit_path = f->fit_out.empty() ? fs::path(out.string() + ".fit.json") : fs::path(f->fit_out);
            r.outputs.push_back({fit_path, json_text(j)});
            r.summary += ", means " + format_double(fit.mean1) + " / " + format_double(fit.mean2);
        }
        return r;
    };
}

Runner setup_weak(CLI::App& app) {
    struct Flags {
        StateFlags state;
        double gamma_w = 0.05;
        std::size_t chi_count = 12;
        double p_min = -4.0;
        double p_max = 4.0;
        std::size_t p_bins = 321;
        double window = 0.02;
        double mask = 1e-3;
        double node_ratio = 0.02;
        double r_max = 3.0;
        bool sampled = false;
        std::size_t samples = 100000;
        std::uint64_t seed = 1;
        std::size_t workers = 1;
        std::size_t surface_bins = 121;
        std::string out;
        std::string surface_out;
    };
    auto f = std::make_shared<Flags>();
    f->state.add(app, "noon:2");
    app.add_option("--gamma-w", f->gamma_w, "weak coupling (mixing angle)");
    app.add_option("--chi-count", f->chi_count, "angles k*pi/count")->check(CLI::PositiveNumber);
    app.add_option("--p-min", f->p_min, "lowest P3 bin");
    app.add_option("--p-max", f->p_max, "highest P3 bin");
    app.add_option("--p-bins", f->p_bins, "number of P3 bins")->check(CLI::Range(3, 1000000));
    app.add_option("--window", f->window, "postselection half-width on P4");
    app.add_option("--mask", f->mask, "mask threshold (fraction of the per-angle maximum)");
    app.add_option("--node-ratio", f->node_ratio, "dip depth that marks a phase node");
    app.add_option("--r-max", f->r_max, "largest |P| kept in the assembled surface");
    app.add_flag("--sampled", f->sampled, "Monte Carlo readouts instead of exact expectations");
    app.add_option("--samples", f->samples, "samples per angle in sampled mode")->check(CLI::PositiveNumber);
    app.add_option("--seed", f->seed, "RNG seed (sampled mode)");
    app.add_option("--workers", f->workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--surface-bins", f->surface_bins, "surface grid points per axis")->check(CLI::Range(3, 100000));
    app.add_option("--out", f->out, "records CSV (chi,p,probability,meter_expectation,phase,masked)");
    app.add_option("--surface-out", f->surface_out, "surface CSV (p1,p2,phase,amplitude,masked)");
    return [f] {
        RunResult r;
        const FockState state = f->state.load(r.inputs);
        WeakConfig cfg;
        cfg.gamma_w = f->gamma_w;
        cfg.chi_grid = uniform_angles(f->chi_count, kPiC);
        cfg.p_grid = Grid1D{f->p_min, f->p_max, f->p_bins};
        cfg.window = f->window;
        cfg.mask_threshold = f->mask;
        cfg.node_ratio = f->node_ratio;
        cfg.r_max = f->r_max;
        cfg.sampled = f->sampled;
        cfg.n_samples = f->samples;
        cfg.seed = f->seed;
        cfg.workers = f->workers;
        const WeakScan scan = weak_scan(state, cfg);
        std::ostringstream rec;
        write_weak_records_csv(rec, scan.records);
        r.outputs.push_back({output_path(f->out, "weak.csv"), rec.str()});
        AssembleOptions ao;
        ao.p1 = ao.p2 = Grid1D::symmetric(f->r_max, f->surface_bins);
        ao.r_max = f->r_max;
        const PhaseSurface surface = assemble_joint_phase(scan.curves, ao);
        std::ostringstream surf;
        write_surface_csv(surf, surface);
        r.outputs.push_back({output_path(f->surface_out, "weak_surface.csv"), surf.str()});
        if (f->sampled) r.seed = f->seed;
        r.summary = "weak: " + std::to_string(scan.curves.size()) + " angles, " +
                    std::to_string(surface.failed_chi.size()) + " interpolated";
        if (cfg.strong_coupling()) r.summary += " (warning: gamma-w above 0.2 is outside the weak regime)";
        return r;
    };
}

Runner setup_state(CLI::App& app) {
    struct Flags {
        StateFlags state;
        std::string axis = "E";
        int mode = 0;
        std::size_t grid_points = 1025;
        double half_width = 0.0;
        std::size_t wave_points = 0;
        std::string out;
        std::string density_out;
        std::string wavefunction_out;
    };
    auto f = std::make_shared<Flags>();
    f->state.add(app, "noon:2");
    app.add_option("--axis", f->axis, "E or P")->check(CLI::IsMember({"E", "P"}));
    app.add_option("--mode", f->mode, "mode for the marginal density")->check(CLI::Range(0, 7));
    app.add_option("--grid-points", f->grid_points, "density grid points")->check(CLI::Range(2, 1 << 22));
    app.add_option("--half-width", f->half_width, "grid half-width (0: from cutoff)");
    app.add_option("--wave-points", f->wave_points, "points per axis of the joint wavefunction (0: skip)");
    app.add_option("--out", f->out, "state JSON");
    app.add_option("--density-out", f->density_out, "density CSV (x,p)");
    app.add_option("--wavefunction-out", f->wavefunction_out, "joint wavefunction CSV (x1,x2,re,im)");
    return [f] {
        RunResult r;
        const FockState state = f->state.load(r.inputs);
        if (f->mode >= state.modes()) throw UsageError("--mode exceeds the number of modes");
        const Axis axis = parse_axis(f->axis);
        r.outputs.push_back({output_path(f->out, "state.json"), state_to_json(state) + "\n"});
        const double hw = f->half_width > 0.0 ? f->half_width : support_half_width(state.max_occupation(1e-30));
        const Density1D d = quadrature_density(state, f->mode, axis, Grid1D::symmetric(hw, f->grid_points));
        std::ostringstream dc;
        write_density_csv(dc, d);
        r.outputs.push_back({output_path(f->density_out, "state_density.csv"), dc.str()});
        if (f->wave_points > 0) {
            const Grid1D g = Grid1D::symmetric(hw, f->wave_points);
            const JointWavefunction psi = joint_wavefunction(state, g, g, axis);
            std::ostringstream wc;
            write_wavefunction_csv(wc, psi);
            r.outputs.push_back({output_path(f->wavefunction_out, "state_wavefunction.csv"), wc.str()});
        }
        r.summary = "state: " + std::to_string(state.modes()) + " modes, cutoff " + std::to_string(state.cutoff()) +
                    ", <" + std::string(to_string(axis)) + "> = " + format_double(d.mean());
        return r;
    };
}

const std::map<std::string, std::pair<const char*, Runner (*)(CLI::App&)>>& subcommands() {
    static const std::map<std::string, std::pair<const char*, Runner (*)(CLI::App&)>> table{
        {"sweep", {"A, B, theta versus delta/k0 for one coupler cell", &setup_sweep}},
        {"solve", {"electrode settings for a target (Theta, Phi)", &setup_solve}},
        {"defects", {"recalibrated coupler versus defective MZI", &setup_defects}},
        {"homodyne", {"Monte Carlo balanced-homodyne campaign", &setup_homodyne}},
        {"reconstruct", {"joint distribution and moment fit from records", &setup_reconstruct}},
        {"weak", {"weak-value phase scan and joint phase surface", &setup_weak}},
        {"state", {"state JSON, marginal density and joint wavefunction", &setup_state}},
    };
    return table;
}

json resolved_config(const CLI::App& app) {
    json j = json::object();
    for (const CLI::Option* opt : app.get_options()) {
        const auto& names = opt->get_lnames();
        if (names.empty() || names.front() == "help" || names.front() == "config") continue;
        std::string value;
        if (opt->count() > 0) {
            const auto& res = opt->results();
            for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
            if (opt->get_type_size() == 0 && value.empty()) value = "true";
        } else {
            value = opt->get_default_str();
            if (opt->get_type_size() == 0 && value.empty()) value = "false";
        }
        j[names.front()] = value;
    }
    return j;
}

void write_outputs(const RunResult& r, const std::string& sub, const json& config, const std::vector<std::string>& args,
                   double seconds) {
    std::vector<std::string> outputs;
    for (const auto& o : r.outputs) outputs.push_back(o.path.string());
    for (const auto& o : r.outputs) {
        if (o.path.has_parent_path()) fs::create_directories(o.path.parent_path());
        std::ofstream f(o.path, std::ios::binary);
        if (!f) throw IoFailure("cannot write '" + o.path.string() + "'");
        f << o.content;
        if (!f) throw IoFailure("failed writing '" + o.path.string() + "'");
    }
    for (const auto& o : r.outputs) {
        json m{{"tool", "kslight"},
               {"version", kVersion},
               {"subcommand", sub},
               {"argv", args},
               {"config", config},
               {"seed", r.seed ? json(*r.seed) : json(nullptr)},
               {"inputs", r.inputs},
               {"output", o.path.string()},
               {"outputs", outputs},
               {"duration_seconds", seconds}};
        const fs::path mp = o.path.string() + ".manifest.json";
        std::ofstream f(mp, std::ios::binary);
        if (!f) throw IoFailure("cannot write '" + mp.string() + "'");
        f << json_text(m);
    }
}

}  // namespace

std::string synopsis() {
    std::string s = "usage: kslight <subcommand> [--config FILE] [options]\n\nsubcommands:\n";
    for (const auto& [name, entry] : subcommands()) {
        s += "  " + name + std::string(12 - name.size(), ' ') + entry.first + "\n";
    }
    s += "\nRun 'kslight <subcommand> --help' for options. Config files hold key=value lines;\n"
         "flags override them. KSLIGHT_OUT_DIR sets the default output directory.\n";
    return s;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << synopsis();
        return kExitUsage;
    }
    const std::string& sub = args.front();
    if (sub == "--help" || sub == "-h" || sub == "help") {
        out << synopsis();
        return kExitOk;
    }
    if (sub == "--version") {
        out << "kslight " << kVersion << "\n";
        return kExitOk;
    }
    const auto it = subcommands().find(sub);
    if (it == subcommands().end()) {
        err << "kslight: unknown subcommand '" << sub << "'\n" << synopsis();
        return kExitUsage;
    }

    CLI::App app{it->second.first, "kslight " + sub};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    std::string config_path;
    app.add_option("--config", config_path, "key=value settings file; flags override it");
    Runner run = it->second.second(app);

    std::vector<std::string> flags(args.begin() + 1, args.end());
    try {
        // Locate --config first so its values can be placed ahead of the flags.
        for (std::size_t i = 0; i < flags.size(); ++i) {
            if (flags[i] == "--config" && i + 1 < flags.size()) {
                config_path = flags[i + 1];
            } else if (flags[i].rfind("--config=", 0) == 0) {
                config_path = flags[i].substr(9);
            }
        }
        std::vector<std::string> all;
        if (!config_path.empty()) all = config_arguments(config_path);
        all.insert(all.end(), flags.begin(), flags.end());
        std::vector<std::string> reversed(all.rbegin(), all.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "kslight " << sub << ": " << e.what() << "\n\n" << synopsis();
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "kslight " << sub << ": " << e.what() << "\n\n" << synopsis();
        return kExitUsage;
    } catch (const IoFailure& e) {
        err << "kslight " << sub << ": " << e.what() << "\n";
        return kExitUsage;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        RunResult r = run();
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_outputs(r, sub, resolved_config(app), args, seconds);
        out << r.summary << "\n";
        for (const auto& o : r.outputs) out << "wrote " << o.path.string() << "\n";
        return kExitOk;
    } catch (const UsageError& e) {
        err << "kslight " << sub << ": " << e.what() << "\n\n" << synopsis();
        return kExitUsage;
    } catch (const Error& e) {
        err << "kslight " << sub << ": " << e.kind() << ": " << e.what() << "\n";
        return kExitDomainError;
    } catch (const IoFailure& e) {
        err << "kslight " << sub << ": IoError: " << e.what() << "\n";
        return kExitDomainError;
    } catch (const std::exception& e) {
        err << "kslight " << sub << ": error: " << e.what() << "\n";
        return kExitDomainError;
    }
}

}  // namespace kslight::cli
