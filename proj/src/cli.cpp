#include "koopgen/cli.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "koopgen/model_io.hpp"
#include "koopgen/newton.hpp"

namespace koopgen::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
    if (!obj.is_object()) throw ConfigError(context + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw ConfigError(context + ": unknown key '" + key + "'");
}

Vector to_vector(const json& arr, const std::string& context) {
    if (!arr.is_array()) throw ConfigError(context + ": expected an array");
    Vector v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
    return v;
}

Matrix to_matrix(const json& arr, const std::string& context) {
    if (!arr.is_array() || arr.empty()) throw ConfigError(context + ": expected a 2d array");
    Matrix m(arr.size(), arr[0].size());
    for (size_t i = 0; i < arr.size(); ++i) {
        if (arr[i].size() != arr[0].size()) throw ConfigError(context + ": ragged rows");
        for (size_t j = 0; j < arr[i].size(); ++j) m(i, j) = arr[i][j].get<double>();
    }
    return m;
}

Box to_box(const json& arr, const std::string& context) {
    if (!arr.is_array() || arr.size() != 2)
        throw ConfigError(context + ": box must be [lo_array, hi_array]");
    return Box(to_vector(arr[0], context), to_vector(arr[1], context));
}

std::unique_ptr<Plant> make_plant(const json& cfg) {
    check_keys(cfg, {"kind", "delta", "alpha", "beta", "box", "nu", "grid", "a", "b"},
               "plant");
    const std::string kind = cfg.at("kind").get<std::string>();
    if (kind == "duffing") {
        DuffingParams p;
        p.delta = cfg.value("delta", p.delta);
        p.alpha = cfg.value("alpha", p.alpha);
        p.beta = cfg.value("beta", p.beta);
        Box box = cfg.contains("box") ? to_box(cfg["box"], "plant.box") : Box::uniform(1, -1, 1);
        return std::make_unique<DuffingPlant>(p, box);
    }
    if (kind == "burgers1d") {
        BurgersParams p;
        p.nu = cfg.value("nu", 0.01);
        p.grid_size = cfg.value("grid", 128);
        Box box = cfg.contains("box") ? to_box(cfg["box"], "plant.box")
                                      : Box(Vector::Constant(1, -0.025), Vector::Constant(1, 0.075));
        return std::make_unique<Burgers1dPlant>(p, box);
    }
    if (kind == "linear") {
        Matrix a = to_matrix(cfg.at("a"), "plant.a");
        Matrix b = to_matrix(cfg.at("b"), "plant.b");
        Box box = cfg.contains("box") ? to_box(cfg["box"], "plant.box")
                                      : Box::uniform(static_cast<int>(b.cols()), -1, 1);
        return std::make_unique<LinearPlant>(a, b, box);
    }
    if (kind == "circle_rotation") {
        Box box = cfg.contains("box") ? to_box(cfg["box"], "plant.box") : Box::uniform(1, -2, 2);
        return std::make_unique<CircleRotationPlant>(box);
    }
    if (kind == "synthetic_nonlinear_input") {
        Box box = cfg.contains("box") ? to_box(cfg["box"], "plant.box") : Box::uniform(1, -1, 1);
        return std::make_unique<SyntheticNonlinearInputPlant>(box);
    }
    throw ConfigError("plant: unknown kind '" + kind + "'");
}

Dictionary make_dictionary(const json& cfg, int obs_dim) {
    check_keys(cfg, {"kind", "degree", "harmonics", "centers", "count", "shape", "bounds",
                     "delay"},
               "dictionary");
    const std::string kind = cfg.at("kind").get<std::string>();
    const int delay = cfg.value("delay", 1);
    const int dim = obs_dim * delay;

    Dictionary dict = Dictionary::identity(1);
    if (kind == "identity") {
        dict = Dictionary::identity(dim);
    } else if (kind == "monomial") {
        dict = Dictionary::monomials(dim, cfg.at("degree").get<int>());
    } else if (kind == "fourier_pair") {
        dict = Dictionary::fourier_pair(cfg.value("harmonics", 1));
    } else if (kind == "rbf") {
        double shape = cfg.at("shape").get<double>();
        if (cfg.contains("centers") && cfg["centers"].is_array()) {
            dict = Dictionary::rbf(to_matrix(cfg["centers"], "dictionary.centers"), shape);
        } else {
            int count = cfg.at("count").get<int>();
            Box bounds = to_box(cfg.at("bounds"), "dictionary.bounds");
            auto pts = halton_rbf_centers(dim, count, bounds);
            Matrix centers(dim, count);
            for (int i = 0; i < count; ++i) centers.col(i) = pts[i];
            dict = Dictionary::rbf(centers, shape);
        }
    } else {
        throw ConfigError("dictionary: unknown kind '" + kind + "'");
    }
    if (delay > 1) dict = dict.with_delay(delay);
    return dict;
}

std::pair<SamplingSpec, std::uint64_t> make_sampling(const json& cfg, int state_dim) {
    check_keys(cfg, {"mode", "num_ics", "ic_box", "input_levels", "derivatives", "pairs",
                     "dt", "seed", "num_trajectories", "steps", "x0", "x0_fill"},
               "sampling");
    SamplingSpec spec;
    const std::string mode = cfg.at("mode").get<std::string>();
    std::vector<Vector> levels;
    if (cfg.contains("input_levels"))
        for (const auto& lvl : cfg["input_levels"])
            levels.push_back(to_vector(lvl, "sampling.input_levels"));

    if (mode == "scattered") {
        ScatteredSampling sc;
        sc.num_ics = cfg.at("num_ics").get<int>();
        sc.ic_box = to_box(cfg.at("ic_box"), "sampling.ic_box");
        sc.input_levels = levels;
        sc.exact_derivatives = cfg.value("derivatives", true);
        sc.snapshot_pairs = cfg.value("pairs", false);
        sc.dt = cfg.value("dt", 0.0);
        spec.scattered = sc;
    } else if (mode == "trajectory") {
        TrajectorySampling tr;
        tr.num_trajectories = cfg.value("num_trajectories", 1);
        tr.steps_per_trajectory = cfg.at("steps").get<int>();
        tr.dt = cfg.at("dt").get<double>();
        tr.input_levels = levels;
        tr.exact_derivatives = cfg.value("derivatives", false);
        if (cfg.contains("x0")) tr.x0 = to_vector(cfg["x0"], "sampling.x0");
        if (cfg.contains("x0_fill"))
            tr.x0 = Vector::Constant(state_dim, cfg["x0_fill"].get<double>());
        if (cfg.contains("ic_box")) tr.ic_box = to_box(cfg["ic_box"], "sampling.ic_box");
        spec.trajectory = tr;
    } else {
        throw ConfigError("sampling: unknown mode '" + mode + "'");
    }
    return {spec, cfg.value("seed", 1ull)};
}

struct FitConfig {
    std::string method = "generator";
    DerivativeMethod derivative = DerivativeMethod::chain_rule();
    double rtol = 1e-10;
};

FitConfig make_fit(const json& cfg) {
    check_keys(cfg, {"method", "derivative", "rtol"}, "fit");
    FitConfig fc;
    fc.method = cfg.value("method", std::string("generator"));
    fc.rtol = cfg.value("rtol", 1e-10);
    const std::string der = cfg.value("derivative", std::string("chain_rule"));
    if (der == "chain_rule")
        fc.derivative = DerivativeMethod::chain_rule();
    else if (der == "forward")
        fc.derivative = DerivativeMethod::finite_difference(FiniteDifferenceStencil::forward());
    else if (der == "central3")
        fc.derivative = DerivativeMethod::finite_difference(FiniteDifferenceStencil::central3());
    else if (der == "central5")
        fc.derivative = DerivativeMethod::finite_difference(FiniteDifferenceStencil::central5());
    else
        throw ConfigError("fit: unknown derivative estimator '" + der + "'");
    if (fc.method != "generator" && fc.method != "operators" && fc.method != "switched")
        throw ConfigError("fit: unknown method '" + fc.method + "'");
    return fc;
}

ModelFile fit_from_config(const Dictionary& dict, const TrajectoryDataset& data,
                          const FitConfig& fc) {
    ModelFile file;
    file.dataset_fingerprint = dataset_fingerprint(data);
    FitInfo info;
    if (fc.method == "generator") {
        file.model = fit_generator(dict, data, fc.derivative, fc.rtol, &info);
        file.fit_residual = info.residual;
        if (!info.warning.empty()) std::cerr << "warning: " << info.warning << '\n';
    } else if (fc.method == "operators") {
        file.model = fit_operators(dict, data, fc.rtol, &info);
        file.fit_residual = info.residual;
        if (!info.warning.empty()) std::cerr << "warning: " << info.warning << '\n';
    } else {
        // Split the dataset by input level for the switched construction.
        std::vector<std::pair<Vector, TrajectoryDataset>> by_level;
        for (const Sample& s : data.samples) {
            auto it = std::find_if(by_level.begin(), by_level.end(), [&](const auto& p) {
                return (p.first - s.u).cwiseAbs().maxCoeff() == 0.0;
            });
            if (it == by_level.end()) {
                TrajectoryDataset d;
                d.dt = data.dt;
                d.input_box = data.input_box;
                by_level.emplace_back(s.u, std::move(d));
                it = std::prev(by_level.end());
            }
            it->second.samples.push_back(s);
        }
        file.model = fit_switched_family(dict, by_level, fc.rtol).derived;
    }
    return file;
}

// Companion matplotlib script; the CSV stays the contract, the script is a
// convenience reader for it.
void write_plot_script(const std::string& dir, const std::string& csv_name,
                       const std::vector<std::string>& columns) {
    std::ofstream os(dir + "/plot_" +
                     csv_name.substr(0, csv_name.find_last_of('.')) + ".py");
    os << "#!/usr/bin/env python3\n"
       << "import csv\n"
       << "import matplotlib.pyplot as plt\n\n"
       << "rows = list(csv.DictReader(open('" << csv_name << "')))\n"
       << "t = [float(r['t']) for r in rows]\n"
       << "fig, ax = plt.subplots()\n";
    auto index_of = [](const std::string& col) {
        auto pos = col.find('_');
        return pos == std::string::npos ? 0 : std::atoi(col.c_str() + pos + 1);
    };
    for (const std::string& col : columns) {
        if (col == "t" || col == "solve_ms" || col == "objective") continue;
        // Lifted and high-dimensional state columns can be numerous; cap them.
        if (col.rfind("z_", 0) == 0 && index_of(col) > 3) continue;
        if (col.rfind("x_", 0) == 0 && index_of(col) > 8) continue;
        os << "ax.plot(t, [float(r['" << col << "']) for r in rows], label='" << col
           << "')\n";
    }
    os << "ax.set_xlabel('t')\n"
       << "ax.legend()\n"
       << "plt.savefig('" << csv_name.substr(0, csv_name.find_last_of('.'))
       << ".png', dpi=150)\n";
}

// Dataset from the sampling block: either a fresh seeded draw or a stored
// dataset file ("mode": "file").
TrajectoryDataset obtain_dataset(const json& sampling_cfg, const Plant& plant,
                                 const Overrides& ov) {
    if (sampling_cfg.is_object() && sampling_cfg.value("mode", std::string()) == "file") {
        check_keys(sampling_cfg, {"mode", "path"}, "sampling");
        return load_dataset(sampling_cfg.at("path").get<std::string>());
    }
    auto [spec, seed] = make_sampling(sampling_cfg, plant.state_dim());
    if (ov.seed) seed = *ov.seed;
    return sample_training_set(plant, spec, seed);
}

std::string resolve_out_dir(const json& cfg, const Overrides& ov) {
    std::string dir = cfg.value("output_dir", std::string("out"));
    if (const char* env = std::getenv("KOOPGEN_OUT")) dir = env;
    if (ov.out_dir) dir = *ov.out_dir;
    fs::create_directories(dir);
    return dir;
}

json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    json cfg;
    try {
        is >> cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return cfg;
}

// Q diagonal built from per-state-coordinate weights, or a full diagonal.
Matrix build_q(const json& ocp_cfg, const Dictionary& dict) {
    Vector diag = Vector::Zero(dict.output_dim());
    if (ocp_cfg.contains("q_state_weights")) {
        Vector w = to_vector(ocp_cfg["q_state_weights"], "ocp.q_state_weights");
        auto idx = dict.state_coordinate_indices();
        if (static_cast<int>(idx.size()) != w.size())
            throw ConfigError("ocp.q_state_weights: weight count must match the state dimension");
        for (size_t i = 0; i < idx.size(); ++i) diag[idx[i]] = w[i];
    } else if (ocp_cfg.contains("q_diag")) {
        diag = to_vector(ocp_cfg["q_diag"], "ocp.q_diag");
        if (diag.size() != dict.output_dim())
            throw ConfigError("ocp.q_diag: length must equal the dictionary size");
    } else {
        throw ConfigError("ocp: q_state_weights or q_diag required");
    }
    return diag.asDiagonal();
}

std::function<Vector(double)> build_reference(const json& cfg, const Dictionary& dict) {
    check_keys(cfg, {"kind", "times", "values", "amplitude", "period", "offset"},
               "ocp.reference");
    const std::string kind = cfg.at("kind").get<std::string>();
    if (kind == "setpoints") {
        std::vector<double> times;
        for (const auto& t : cfg.at("times")) times.push_back(t.get<double>());
        std::vector<Vector> lifted;
        for (const auto& v : cfg.at("values"))
            lifted.push_back(dict.eval(to_vector(v, "reference.values")));
        if (times.empty() || times.size() != lifted.size())
            throw ConfigError("reference: times and values must pair up");
        return [times, lifted](double t) {
            size_t i = 0;
            while (i + 1 < times.size() && t >= times[i + 1]) ++i;
            return lifted[i];
        };
    }
    if (kind == "sinusoid_obs") {
        const double amp = cfg.at("amplitude").get<double>();
        const double period = cfg.at("period").get<double>();
        const double offset = cfg.value("offset", 0.0);
        const Dictionary d = dict;
        return [amp, period, offset, d](double t) {
            const double value = offset + amp * std::sin(2.0 * 3.141592653589793 * t / period);
            return d.eval(Vector::Constant(d.input_dim(), value));
        };
    }
    throw ConfigError("reference: unknown kind '" + kind + "'");
}

OcpSpec build_ocp_spec(const json& cfg, AnyModel model, const Dictionary& dict,
                       const Box& input_box) {
    check_keys(cfg, {"horizon", "dt", "q_state_weights", "q_diag", "r_weight", "reference",
                     "solver", "tol", "max_iter", "basis", "harmonics"},
               "ocp");
    OcpSpec spec;
    spec.horizon = cfg.at("horizon").get<int>();
    spec.dt = cfg.at("dt").get<double>();
    spec.input_box = input_box;
    if (std::holds_alternative<OperatorModel>(model))
        spec.model = std::get<OperatorModel>(model);
    else
        spec.model = std::get<GeneratorModel>(model);

    Matrix q = build_q(cfg, dict);
    const int n_c = input_box.dim();
    Matrix r = cfg.value("r_weight", 1e-4) * Matrix::Identity(n_c, n_c);
    auto a = build_reference(cfg.at("reference"), dict);
    spec.cost.q = [q](double) { return q; };
    spec.cost.r = [r](double) { return r; };
    spec.cost.a = a;

    const std::string basis = cfg.value("basis", std::string("indicator"));
    if (basis == "indicator") {
        spec.basis.kind = InputBasis::Indicator;
    } else if (basis == "fourier") {
        spec.basis.kind = InputBasis::Fourier;
        spec.basis.harmonics = cfg.value("harmonics", 1);
    } else {
        throw ConfigError("ocp: unknown basis '" + basis + "'");
    }
    spec.validate();
    return spec;
}

int guard(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const FitFailure& e) {
        std::cerr << "fit failure: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

const std::set<std::string> kTrainKeys = {"plant", "dictionary", "sampling", "fit",
                                          "output_dir", "model_out", "dataset_out"};
const std::set<std::string> kPredictKeys = {"model_file", "predict", "plant", "output_dir"};
const std::set<std::string> kMpcKeys = {"plant", "dictionary", "model_file", "sampling",
                                        "fit", "ocp", "mpc", "output_dir"};
const std::set<std::string> kValidateKeys = {"model_file", "plant", "dictionary", "sampling",
                                             "fit", "output_dir"};

}  // namespace

int cmd_train(const std::string& config_path, const Overrides& ov) {
    return guard([&]() {
        json cfg = load_config(config_path);
        check_keys(cfg, kTrainKeys, "config");
        auto plant = make_plant(cfg.at("plant"));
        Dictionary dict = make_dictionary(cfg.at("dictionary"), plant->observation_dim());
        FitConfig fc = make_fit(cfg.value("fit", json::object()));

        TrajectoryDataset data = obtain_dataset(cfg.at("sampling"), *plant, ov);
        ModelFile file = fit_from_config(dict, data, fc);

        std::string dir = resolve_out_dir(cfg, ov);
        std::string out = dir + "/" + cfg.value("model_out", std::string("model.txt"));
        save_model(out, file);
        if (cfg.contains("dataset_out"))
            save_dataset(dir + "/" + cfg["dataset_out"].get<std::string>(), data);
        const int n_o = std::holds_alternative<OperatorModel>(file.model)
                            ? std::get<OperatorModel>(file.model).dim()
                            : std::get<GeneratorModel>(file.model).dim();
        std::cout << "trained " << fc.method << " model (n_o = " << n_o << ", samples = "
                  << data.samples.size() << ") -> " << out << '\n';
        return 0;
    });
}

int cmd_predict(const std::string& config_path, const Overrides& ov) {
    return guard([&]() {
        json cfg = load_config(config_path);
        check_keys(cfg, kPredictKeys, "config");
        ModelFile file = load_model(cfg.at("model_file").get<std::string>());
        const json& pc = cfg.at("predict");
        check_keys(pc, {"x0", "plant_x0", "steps", "dt", "input", "scheme", "out"}, "predict");

        const Dictionary& dict =
            std::holds_alternative<OperatorModel>(file.model)
                ? std::get<OperatorModel>(file.model).dictionary
                : std::get<GeneratorModel>(file.model).dictionary;
        const Box& box = std::holds_alternative<OperatorModel>(file.model)
                             ? std::get<OperatorModel>(file.model).input_box
                             : std::get<GeneratorModel>(file.model).input_box;

        const int steps = pc.at("steps").get<int>();
        double dt = std::holds_alternative<OperatorModel>(file.model)
                        ? std::get<OperatorModel>(file.model).dt
                        : pc.at("dt").get<double>();

        // Input schedule sampled at interval starts.
        const json& ic = pc.at("input");
        check_keys(ic, {"kind", "value", "amplitude"}, "predict.input");
        const std::string ikind = ic.at("kind").get<std::string>();
        const int n_c = box.dim();
        PiecewiseConstantSignal signal;
        signal.dt = dt;
        for (int k = 0; k < steps; ++k) {
            Vector u = Vector::Zero(n_c);
            if (ikind == "constant")
                u = to_vector(ic.at("value"), "predict.input.value");
            else if (ikind == "sin_pi_t")
                u = Vector::Constant(n_c, ic.value("amplitude", 1.0) *
                                              std::sin(3.141592653589793 * k * dt));
            else if (ikind != "zero")
                throw ConfigError("predict.input: unknown kind '" + ikind + "'");
            signal.inputs.push_back(u);
        }

        std::unique_ptr<Plant> plant;
        Vector x_plant;
        if (cfg.contains("plant")) {
            plant = make_plant(cfg["plant"]);
            x_plant = to_vector(pc.at("plant_x0"), "predict.plant_x0");
        }
        Vector x0 = plant ? plant->observe(x_plant) : to_vector(pc.at("x0"), "predict.x0");

        IntegrationScheme scheme = parse_scheme(pc.value("scheme", std::string("exact")));
        std::vector<Vector> z = lift_and_predict(file.model, dict, x0, signal, scheme);

        auto coords = dict.state_coordinate_indices();
        TrajectoryTable table;
        table.columns.push_back("t");
        for (int i = 0; i < dict.output_dim(); ++i)
            table.columns.push_back("z_" + std::to_string(i + 1));
        if (plant)
            for (int i = 0; i < plant->observation_dim(); ++i)
                table.columns.push_back("x_" + std::to_string(i + 1));
        for (int i = 0; i < n_c; ++i) table.columns.push_back("u_" + std::to_string(i + 1));
        const bool with_err = plant && !coords.empty();
        if (with_err) table.columns.push_back("err");

        Vector x_true = x_plant;
        for (int k = 0; k <= steps; ++k) {
            std::vector<double> row;
            row.push_back(k * dt);
            for (int i = 0; i < dict.output_dim(); ++i) row.push_back(z[k][i]);
            Vector y_true;
            if (plant) {
                y_true = plant->observe(x_true);
                for (int i = 0; i < y_true.size(); ++i) row.push_back(y_true[i]);
            }
            for (int i = 0; i < n_c; ++i)
                row.push_back(k < steps ? signal.inputs[k][i] : signal.inputs.back()[i]);
            if (with_err) {
                double err = 0.0;
                for (size_t i = 0; i < coords.size(); ++i)
                    err = std::max(err, std::abs(z[k][coords[i]] - y_true[i]));
                row.push_back(err);
            }
            table.rows.push_back(std::move(row));
            if (plant && k < steps) x_true = plant->step(x_true, signal.inputs[k], dt);
        }

        std::string dir = resolve_out_dir(cfg, ov);
        std::string csv_name = pc.value("out", std::string("prediction.csv"));
        std::string out = dir + "/" + csv_name;
        write_csv(out, table);
        if (ov.plot_script) write_plot_script(dir, csv_name, table.columns);
        std::cout << "wrote " << table.rows.size() << " rows -> " << out << '\n';
        return 0;
    });
}

int cmd_mpc(const std::string& config_path, const Overrides& ov) {
    return guard([&]() {
        json cfg = load_config(config_path);
        check_keys(cfg, kMpcKeys, "config");
        auto plant = make_plant(cfg.at("plant"));
        Dictionary dict = make_dictionary(cfg.at("dictionary"), plant->observation_dim());

        AnyModel model;
        if (cfg.contains("model_file")) {
            model = load_model(cfg.at("model_file").get<std::string>()).model;
        } else {
            FitConfig fc = make_fit(cfg.value("fit", json::object()));
            TrajectoryDataset data = obtain_dataset(cfg.at("sampling"), *plant, ov);
            model = fit_from_config(dict, data, fc).model;
        }

        OcpSpec spec = build_ocp_spec(cfg.at("ocp"), model, dict, plant->input_box());
        const json& mc = cfg.at("mpc");
        check_keys(mc, {"t_final", "warm_start", "x0"}, "mpc");
        MpcOptions opts;
        opts.t_final = mc.at("t_final").get<double>();
        opts.warm_start = mc.value("warm_start", true);
        opts.tol = cfg["ocp"].value("tol", 1e-8);
        opts.max_iter = cfg["ocp"].value("max_iter", 200);
        const std::string solver = cfg["ocp"].value("solver", std::string("bfgs"));
        if (solver == "newton")
            opts.solver = MpcOptions::Newton;
        else if (solver != "bfgs")
            throw ConfigError("ocp: unknown solver '" + solver + "'");

        Vector x0;
        if (mc.contains("x0"))
            x0 = to_vector(mc["x0"], "mpc.x0");
        else if (plant->name() == "burgers1d")
            x0 = Vector::Constant(plant->state_dim(), 0.5);
        else
            x0 = Vector::Zero(plant->state_dim());

        ClosedLoopRecord record = mpc_loop(*plant, dict, spec, x0, opts);

        std::string dir = resolve_out_dir(cfg, ov);
        TrajectoryTable table;
        table.columns.push_back("t");
        for (int i = 0; i < plant->state_dim(); ++i)
            table.columns.push_back("x_" + std::to_string(i + 1));
        for (int i = 0; i < plant->input_dim(); ++i)
            table.columns.push_back("u_" + std::to_string(i + 1));
        table.columns.push_back("objective");
        table.columns.push_back("solve_ms");
        for (size_t k = 0; k < record.t.size(); ++k) {
            std::vector<double> row;
            row.push_back(record.t[k]);
            for (int i = 0; i < plant->state_dim(); ++i) row.push_back(record.x[k][i]);
            const bool has_u = k > 0;
            for (int i = 0; i < plant->input_dim(); ++i)
                row.push_back(has_u ? record.u[k - 1][i] : 0.0);
            row.push_back(has_u ? record.objective[k - 1] : 0.0);
            row.push_back(has_u ? record.solve_ms[k - 1] : 0.0);
            table.rows.push_back(std::move(row));
        }
        write_csv(dir + "/closed_loop.csv", table);
        if (ov.plot_script) write_plot_script(dir, "closed_loop.csv", table.columns);

        json summary;
        summary["completed"] = record.completed;
        summary["abort_reason"] = record.abort_reason;
        summary["steps"] = record.u.size();
        summary["tracking_error_integral"] = record.tracking_error_integral;
        summary["weighted_tracking_error_integral"] =
            record.weighted_tracking_error_integral;
        summary["total_solve_ms"] = record.total_solve_ms;
        double max_ms = 0, sum_ms = 0;
        int converged = 0;
        for (size_t k = 0; k < record.solve_ms.size(); ++k) {
            max_ms = std::max(max_ms, record.solve_ms[k]);
            sum_ms += record.solve_ms[k];
            converged += record.solver_converged[k] ? 1 : 0;
        }
        summary["mean_solve_ms"] = record.solve_ms.empty() ? 0.0 : sum_ms / record.solve_ms.size();
        summary["max_solve_ms"] = max_ms;
        summary["solver_converged_fraction"] =
            record.solve_ms.empty() ? 1.0
                                    : static_cast<double>(converged) / record.solve_ms.size();
        std::ofstream os(dir + "/summary.json");
        os << summary.dump(2) << '\n';

        std::cout << "mpc run: " << record.u.size() << " steps, tracking error integral "
                  << record.tracking_error_integral << " -> " << dir << '\n';
        if (!record.completed) {
            std::cerr << "mpc run aborted: " << record.abort_reason << '\n';
            return 1;
        }
        return 0;
    });
}

int cmd_validate(const std::string& config_path, const Overrides& ov) {
    return guard([&]() {
        json cfg = load_config(config_path);
        check_keys(cfg, kValidateKeys, "config");
        ModelFile file = load_model(cfg.at("model_file").get<std::string>());
        auto plant = make_plant(cfg.at("plant"));
        Dictionary dict = make_dictionary(cfg.at("dictionary"), plant->observation_dim());
        FitConfig fc = make_fit(cfg.value("fit", json::object()));
        TrajectoryDataset data = obtain_dataset(cfg.at("sampling"), *plant, ov);

        json report = json::array();
        auto add = [&report](const std::string& name, bool pass, double measured,
                             double threshold, const std::string& note) {
            report.push_back({{"check", name},
                              {"pass", pass},
                              {"measured", measured},
                              {"threshold", threshold},
                              {"note", note}});
        };

        // 1. Refit comparison: the stored matrices must match a fresh fit on
        //    the regenerated dataset (detects tampered files).
        {
            ModelFile refit = fit_from_config(dict, data, fc);
            double diff = 0.0, scale = 1.0;
            if (std::holds_alternative<OperatorModel>(file.model) &&
                std::holds_alternative<OperatorModel>(refit.model)) {
                const auto& a = std::get<OperatorModel>(file.model);
                const auto& b = std::get<OperatorModel>(refit.model);
                diff = (a.k0dt - b.k0dt).cwiseAbs().maxCoeff();
                for (int i = 0; i < a.input_dim(); ++i)
                    diff = std::max(diff, (a.bdt[i] - b.bdt[i]).cwiseAbs().maxCoeff());
                scale = std::max(1.0, a.k0dt.cwiseAbs().maxCoeff());
            } else if (std::holds_alternative<GeneratorModel>(file.model) &&
                       std::holds_alternative<GeneratorModel>(refit.model)) {
                const auto& a = std::get<GeneratorModel>(file.model);
                const auto& b = std::get<GeneratorModel>(refit.model);
                diff = (a.k0 - b.k0).cwiseAbs().maxCoeff();
                for (int i = 0; i < a.input_dim(); ++i)
                    diff = std::max(diff, (a.b[i] - b.b[i]).cwiseAbs().maxCoeff());
                scale = std::max(1.0, a.k0.cwiseAbs().maxCoeff());
            } else {
                add("refit_match", false, 0.0, 0.0, "model kind disagrees with fit config");
                scale = 0.0;
            }
            if (scale > 0.0)
                add("refit_match", diff <= 1e-9 * scale, diff, 1e-9 * scale,
                    "max entry difference vs fresh fit");
        }

        // 2. Theorem-3 identity on the dataset, when snapshot pairs exist.
        if (data.has_pairs()) {
            OperatorModel op = fit_operators(dict, data, fc.rtol);
            GeneratorModel gen = fit_generator(
                dict, data, DerivativeMethod::finite_difference(FiniteDifferenceStencil::forward()),
                fc.rtol);
            OperatorModel euler = generator_to_operator(gen, data.dt);
            double err_k = (op.k0dt - euler.k0dt).norm() / std::max(1.0, op.k0dt.norm());
            double err_b = 0.0;
            for (int i = 0; i < op.input_dim(); ++i)
                err_b = std::max(err_b, (op.bdt[i] - euler.bdt[i]).norm() /
                                            std::max(1.0, op.bdt[i].norm()));
            add("theorem3_identity", err_k <= 1e-9 && err_b <= 1e-9, std::max(err_k, err_b),
                1e-9, "operator fit vs Euler map of the generator fit");
        }

        // 3. Model-level input affinity of the one-step map.
        {
            Rng rng(7);
            double worst = 0.0;
            for (int trial = 0; trial < 100; ++trial) {
                Vector z(dict.output_dim());
                for (int i = 0; i < z.size(); ++i) z[i] = rng.uniform(-1, 1);
                Vector u1 = rng.uniform_in(plant->input_box());
                Vector u2 = rng.uniform_in(plant->input_box());
                double alpha = rng.uniform01();
                Vector mix = alpha * u1 + (1.0 - alpha) * u2;
                Vector lhs, r1, r2;
                if (std::holds_alternative<OperatorModel>(file.model)) {
                    const auto& m = std::get<OperatorModel>(file.model);
                    lhs = m.at(mix) * z;
                    r1 = m.at(u1) * z;
                    r2 = m.at(u2) * z;
                } else {
                    const auto& m = std::get<GeneratorModel>(file.model);
                    lhs = m.at(mix) * z;
                    r1 = m.at(u1) * z;
                    r2 = m.at(u2) * z;
                }
                double scale = std::max(1.0, lhs.cwiseAbs().maxCoeff());
                worst = std::max(worst,
                                 (lhs - alpha * r1 - (1.0 - alpha) * r2).cwiseAbs().maxCoeff() /
                                     scale);
            }
            add("model_affinity", worst <= 1e-12, worst, 1e-12,
                "one-step map affine in u (exact by construction)");
        }

        // 4. Adjoint gradient vs central finite differences on a random OCP.
        {
            OcpSpec spec;
            if (std::holds_alternative<OperatorModel>(file.model))
                spec.model = std::get<OperatorModel>(file.model);
            else
                spec.model = std::get<GeneratorModel>(file.model);
            spec.horizon = 5;
            spec.dt = std::holds_alternative<OperatorModel>(file.model)
                          ? std::get<OperatorModel>(file.model).dt
                          : 0.1;
            spec.input_box = plant->input_box();
            const int n_o = dict.output_dim();
            Matrix q = Matrix::Identity(n_o, n_o);
            Matrix r = 0.1 * Matrix::Identity(plant->input_dim(), plant->input_dim());
            spec.cost = StageCostSchedule::constant(q, r, Vector::Zero(n_o));

            DiscreteOcp ocp = resolve_ocp(spec);
            Rng rng(11);
            Vector z0(n_o);
            for (int i = 0; i < n_o; ++i) z0[i] = rng.uniform(-1, 1);
            Vector uhat(ocp.coeff_dim());
            for (int i = 0; i < uhat.size(); ++i) uhat[i] = rng.uniform(-0.1, 0.1);

            auto jfun = [&](const Vector& uh) {
                auto u = ocp.unstack(uh);
                auto z = ocp.forward(z0, u);
                return ocp.objective(z, u);
            };
            auto u = ocp.unstack(uhat);
            auto z = ocp.forward(z0, u);
            Vector grad = ocp.coeff_gradient(ocp.interval_gradient(z, ocp.adjoint(z, u), u));
            double eps = 1e-6 * (1.0 + uhat.norm());
            double worst = 0.0;
            for (int i = 0; i < uhat.size(); ++i) {
                Vector up = uhat, dn = uhat;
                up[i] += eps;
                dn[i] -= eps;
                double fd = (jfun(up) - jfun(dn)) / (2.0 * eps);
                worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(fd)));
            }
            add("gradient_check", worst <= 1e-5, worst, 1e-5,
                "adjoint gradient vs central differences");
        }

        // 5. Linear plants: fitted model must reproduce the exact flow.
        if (plant->name() == "linear" && data.has_pairs() &&
            std::holds_alternative<OperatorModel>(file.model)) {
            const auto& m = std::get<OperatorModel>(file.model);
            Rng rng(13);
            double worst = 0.0;
            for (int trial = 0; trial < 20; ++trial) {
                Vector x(plant->state_dim());
                for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1, 1);
                Vector u = rng.uniform_in(plant->input_box());
                Vector z = m.at(u) * dict.eval(x);
                Vector zt = dict.eval(plant->step(x, u, m.dt));
                worst = std::max(worst, (z - zt).cwiseAbs().maxCoeff());
            }
            add("linear_exactness", worst <= 1e-8, worst, 1e-8,
                "one-step prediction vs exact linear flow");
        }

        std::string dir = resolve_out_dir(cfg, ov);
        std::ofstream os(dir + "/validation.json");
        os << report.dump(2) << '\n';

        bool all_pass = true;
        for (const auto& entry : report) {
            bool pass = entry.at("pass").get<bool>();
            all_pass = all_pass && pass;
            std::cout << (pass ? "PASS " : "FAIL ") << entry.at("check").get<std::string>()
                      << " (measured " << entry.at("measured").get<double>() << ", threshold "
                      << entry.at("threshold").get<double>() << ")\n";
        }
        return all_pass ? 0 : 1;
    });
}

}  // namespace koopgen::cli
