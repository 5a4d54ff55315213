#include "koopgen/model_io.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace koopgen {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

constexpr const char* kMagic = "koopgen model 1";

void write_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
    os << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            os << fmt17(m(i, j));
        }
        os << '\n';
    }
}

Matrix read_matrix_body(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            if (!(is >> m(i, j)))
                throw std::invalid_argument("model file: truncated matrix block");
    return m;
}

std::map<std::string, std::string> parse_kv(const std::vector<std::string>& tokens,
                                            size_t from) {
    std::map<std::string, std::string> kv;
    for (size_t i = from; i < tokens.size(); ++i) {
        auto pos = tokens[i].find('=');
        if (pos == std::string::npos)
            throw std::invalid_argument("model file: malformed key=value token '" + tokens[i] +
                                        "'");
        kv[tokens[i].substr(0, pos)] = tokens[i].substr(pos + 1);
    }
    return kv;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

}  // namespace

std::string dictionary_to_header(const Dictionary& dict) {
    std::ostringstream os;
    os << basis_kind_name(dict.kind()) << " n=" << dict.input_dim()
       << " delay=" << dict.delay_depth();
    if (dict.kind() == BasisKind::Monomial) os << " degree=" << dict.degree();
    if (dict.kind() == BasisKind::FourierPair) os << " harmonics=" << dict.harmonics();
    if (dict.kind() == BasisKind::Rbf)
        os << " centers=" << dict.centers().cols() << " shape=" << fmt17(dict.shape());
    return os.str();
}

void save_model(const std::string& path, const ModelFile& file) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open model file for writing: " + path);

    const bool discrete = std::holds_alternative<OperatorModel>(file.model);
    const Dictionary& dict = discrete ? std::get<OperatorModel>(file.model).dictionary
                                      : std::get<GeneratorModel>(file.model).dictionary;
    const Box& box = discrete ? std::get<OperatorModel>(file.model).input_box
                              : std::get<GeneratorModel>(file.model).input_box;
    const int n_o = discrete ? std::get<OperatorModel>(file.model).dim()
                             : std::get<GeneratorModel>(file.model).dim();
    const int n_c = discrete ? std::get<OperatorModel>(file.model).input_dim()
                             : std::get<GeneratorModel>(file.model).input_dim();

    os << kMagic << '\n';
    os << "kind " << (discrete ? "operator" : "generator") << '\n';
    os << "dt " << fmt17(discrete ? std::get<OperatorModel>(file.model).dt : 0.0) << '\n';
    os << "n_o " << n_o << '\n';
    os << "n_c " << n_c << '\n';
    os << "input_box";
    for (int i = 0; i < box.dim(); ++i) os << ' ' << fmt17(box.lo[i]);
    for (int i = 0; i < box.dim(); ++i) os << ' ' << fmt17(box.hi[i]);
    os << '\n';
    os << "dictionary " << dictionary_to_header(dict) << '\n';
    os << "fit_residual " << fmt17(file.fit_residual) << '\n';
    os << "dataset_fingerprint "
       << (file.dataset_fingerprint.empty() ? "none" : file.dataset_fingerprint) << '\n';

    if (dict.kind() == BasisKind::Rbf) write_matrix(os, "rbf_centers", dict.centers());
    if (discrete) {
        const OperatorModel& m = std::get<OperatorModel>(file.model);
        write_matrix(os, "K0", m.k0dt);
        for (int i = 0; i < n_c; ++i) write_matrix(os, "B" + std::to_string(i + 1), m.bdt[i]);
    } else {
        const GeneratorModel& m = std::get<GeneratorModel>(file.model);
        write_matrix(os, "K0", m.k0);
        for (int i = 0; i < n_c; ++i) write_matrix(os, "B" + std::to_string(i + 1), m.b[i]);
    }
    if (!os) throw std::runtime_error("failed while writing model file: " + path);
}

ModelFile load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open model file: " + path);

    std::string line;
    if (!std::getline(is, line) || line != kMagic)
        throw std::invalid_argument("model file: bad or missing format header");

    std::string kind;
    double dt = 0.0, fit_residual = 0.0;
    int n_o = -1, n_c = -1;
    Box box;
    std::string fingerprint;
    std::optional<Dictionary> dict;
    Matrix rbf_centers;
    int rbf_count = 0;
    double rbf_shape = 1.0;
    int dict_n = 0, dict_degree = 0, dict_harmonics = 1, dict_delay = 1;
    BasisKind dict_kind = BasisKind::Identity;

    Matrix k0;
    std::vector<Matrix> b;
    bool have_k0 = false;

    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string& key = tok[0];

        if (key == "kind") {
            kind = tok.at(1);
        } else if (key == "dt") {
            dt = std::stod(tok.at(1));
        } else if (key == "n_o") {
            n_o = std::stoi(tok.at(1));
        } else if (key == "n_c") {
            n_c = std::stoi(tok.at(1));
        } else if (key == "input_box") {
            if (n_c < 0) throw std::invalid_argument("model file: input_box before n_c");
            if (static_cast<int>(tok.size()) != 1 + 2 * n_c)
                throw std::invalid_argument("model file: input_box entry count mismatch");
            Vector lo(n_c), hi(n_c);
            for (int i = 0; i < n_c; ++i) lo[i] = std::stod(tok[1 + i]);
            for (int i = 0; i < n_c; ++i) hi[i] = std::stod(tok[1 + n_c + i]);
            box = Box(lo, hi);
        } else if (key == "dictionary") {
            dict_kind = parse_basis_kind(tok.at(1));
            auto kv = parse_kv(tok, 2);
            dict_n = std::stoi(kv.at("n"));
            dict_delay = kv.count("delay") ? std::stoi(kv.at("delay")) : 1;
            if (dict_kind == BasisKind::Monomial) dict_degree = std::stoi(kv.at("degree"));
            if (dict_kind == BasisKind::FourierPair)
                dict_harmonics = std::stoi(kv.at("harmonics"));
            if (dict_kind == BasisKind::Rbf) {
                rbf_count = std::stoi(kv.at("centers"));
                rbf_shape = std::stod(kv.at("shape"));
            }
        } else if (key == "fit_residual") {
            fit_residual = std::stod(tok.at(1));
        } else if (key == "dataset_fingerprint") {
            fingerprint = tok.at(1) == "none" ? "" : tok.at(1);
        } else if (key == "matrix") {
            const std::string& name = tok.at(1);
            Eigen::Index rows = std::stoi(tok.at(2)), cols = std::stoi(tok.at(3));
            Matrix m = read_matrix_body(is, rows, cols);
            if (name == "rbf_centers")
                rbf_centers = std::move(m);
            else if (name == "K0") {
                k0 = std::move(m);
                have_k0 = true;
            } else if (name.size() > 1 && name[0] == 'B') {
                size_t idx = std::stoul(name.substr(1));
                if (b.size() < idx) b.resize(idx);
                b[idx - 1] = std::move(m);
            } else
                throw std::invalid_argument("model file: unknown matrix block '" + name + "'");
        } else {
            throw std::invalid_argument("model file: unknown header line '" + key + "'");
        }
    }

    if (kind.empty() || n_o < 1 || n_c < 0 || !have_k0 ||
        static_cast<int>(b.size()) != n_c)
        throw std::invalid_argument("model file: incomplete header or matrix set");

    switch (dict_kind) {
        case BasisKind::Identity: dict = Dictionary::identity(dict_n); break;
        case BasisKind::Monomial: dict = Dictionary::monomials(dict_n, dict_degree); break;
        case BasisKind::FourierPair: dict = Dictionary::fourier_pair(dict_harmonics); break;
        case BasisKind::Rbf:
            if (rbf_centers.rows() != dict_n || rbf_centers.cols() != rbf_count)
                throw std::invalid_argument("model file: rbf center block missing or mismatched");
            dict = Dictionary::rbf(rbf_centers, rbf_shape);
            break;
    }
    if (dict_delay > 1) dict = dict->with_delay(dict_delay);
    if (dict->output_dim() != n_o)
        throw std::invalid_argument("model file: dictionary size disagrees with n_o");

    ModelFile file;
    file.fit_residual = fit_residual;
    file.dataset_fingerprint = fingerprint;
    if (kind == "operator") {
        OperatorModel m;
        m.k0dt = std::move(k0);
        m.bdt = std::move(b);
        m.dt = dt;
        m.dictionary = *dict;
        m.input_box = box;
        m.validate();
        file.model = std::move(m);
    } else if (kind == "generator") {
        GeneratorModel m;
        m.k0 = std::move(k0);
        m.b = std::move(b);
        m.dictionary = *dict;
        m.input_box = box;
        m.validate();
        file.model = std::move(m);
    } else {
        throw std::invalid_argument("model file: unknown kind '" + kind + "'");
    }
    return file;
}

namespace {

void fnv_mix(std::uint64_t& h, const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
}

void fnv_mix_vector(std::uint64_t& h, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        double d = v[i];
        fnv_mix(h, &d, sizeof(d));
    }
}

}  // namespace

std::string dataset_fingerprint(const TrajectoryDataset& data) {
    std::uint64_t h = 1469598103934665603ull;
    double dt = data.dt;
    fnv_mix(h, &dt, sizeof(dt));
    for (const Sample& s : data.samples) {
        fnv_mix_vector(h, s.x);
        fnv_mix_vector(h, s.u);
        if (s.xdot) fnv_mix_vector(h, *s.xdot);
        if (s.xnext) fnv_mix_vector(h, *s.xnext);
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

namespace {

nlohmann::json vector_to_json(const Vector& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vector vector_from_json(const nlohmann::json& arr) {
    Vector v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

}  // namespace

void save_dataset(const std::string& path, const TrajectoryDataset& data) {
    data.validate();
    nlohmann::json j;
    j["format"] = "koopgen-dataset-1";
    j["dt"] = data.dt;
    j["source"] = data.source;
    j["input_box"] = {vector_to_json(data.input_box.lo), vector_to_json(data.input_box.hi)};
    nlohmann::json samples = nlohmann::json::array();
    for (const Sample& s : data.samples) {
        nlohmann::json e;
        e["traj"] = s.traj_id;
        e["step"] = s.step_idx;
        e["x"] = vector_to_json(s.x);
        e["u"] = vector_to_json(s.u);
        if (s.xdot) e["xdot"] = vector_to_json(*s.xdot);
        if (s.xnext) e["xnext"] = vector_to_json(*s.xnext);
        samples.push_back(std::move(e));
    }
    j["samples"] = std::move(samples);

    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open dataset file for writing: " + path);
    os << j.dump(1) << '\n';
    if (!os) throw std::runtime_error("failed while writing dataset file: " + path);
}

TrajectoryDataset load_dataset(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open dataset file: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("dataset file: parse error: ") + e.what());
    }
    if (j.value("format", std::string()) != "koopgen-dataset-1")
        throw std::invalid_argument("dataset file: bad or missing format tag");

    TrajectoryDataset data;
    data.dt = j.value("dt", 0.0);
    data.source = j.value("source", std::string());
    if (j.contains("input_box"))
        data.input_box = Box(vector_from_json(j["input_box"].at(0)),
                             vector_from_json(j["input_box"].at(1)));
    for (const auto& e : j.at("samples")) {
        Sample s;
        s.traj_id = e.value("traj", 0);
        s.step_idx = e.value("step", 0);
        s.x = vector_from_json(e.at("x"));
        s.u = vector_from_json(e.at("u"));
        if (e.contains("xdot")) s.xdot = vector_from_json(e["xdot"]);
        if (e.contains("xnext")) s.xnext = vector_from_json(e["xnext"]);
        data.samples.push_back(std::move(s));
    }
    data.validate();
    return data;
}

void write_csv(const std::string& path, const TrajectoryTable& table) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open csv for writing: " + path);
    for (size_t i = 0; i < table.columns.size(); ++i) {
        if (i) os << ',';
        os << table.columns[i];
    }
    os << '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw std::invalid_argument("write_csv: row width mismatch");
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << fmt17(row[i]);
        }
        os << '\n';
    }
    if (!os) throw std::runtime_error("failed while writing csv: " + path);
}

TrajectoryTable read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open csv: " + path);
    TrajectoryTable table;
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("csv: missing header row");
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) table.columns.push_back(cell);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream rs(line);
        while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != table.columns.size())
            throw std::invalid_argument("csv: row width mismatch");
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace koopgen
