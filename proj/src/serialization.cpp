#include "oqe/serialization.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "oqe/errors.hpp"

namespace oqe {

namespace {

Json complex_list(const cplx* data, long count) {
    Json out = Json::array();
    for (long i = 0; i < count; ++i) {
        out.push_back(data[i].real());
        out.push_back(data[i].imag());
    }
    return out;
}

Json matrix_to_list(const Matrix& m) {
    Json out = Json::array();
    for (long r = 0; r < m.rows(); ++r)
        for (long c = 0; c < m.cols(); ++c) {
            out.push_back(m(r, c).real());
            out.push_back(m(r, c).imag());
        }
    return out;
}

Matrix matrix_from_list(const Json& j, long rows, long cols, const char* what) {
    if (!j.is_array() || static_cast<long>(j.size()) != 2 * rows * cols)
        throw IoError(std::string("parse: ") + what + " has unexpected length");
    Matrix m(rows, cols);
    long idx = 0;
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) {
            const double re = j[idx++].get<double>();
            const double im = j[idx++].get<double>();
            m(r, c) = cplx(re, im);
        }
    return m;
}

Vector vector_from_list(const Json& j, long size, const char* what) {
    const Matrix m = matrix_from_list(j, size, 1, what);
    return m.col(0);
}

} // namespace

Json model_to_json(const OqeModel& model) {
    Json j;
    j["format"] = "oqe-model/1";
    j["d"] = model.d;
    j["D"] = model.D;
    j["seed"] = model.seed;
    j["time_independent"] = model.time_independent;
    if (model.initial.is_pure) {
        j["psi_se"] = complex_list(model.initial.pure.data(), model.initial.pure.size());
    } else {
        j["rho_se"] = matrix_to_list(model.initial.mixed);
    }
    Json us = Json::array();
    for (const Matrix& u : model.unitaries) us.push_back(matrix_to_list(u));
    j["unitaries"] = us;
    return j;
}

OqeModel model_from_json(const Json& j) {
    try {
        OqeModel m;
        m.d = j.at("d").get<int>();
        m.D = j.at("D").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.time_independent = j.at("time_independent").get<bool>();
        const long dim = static_cast<long>(m.d) * m.D;
        if (j.contains("psi_se")) {
            m.initial = SeState::from_pure(vector_from_list(j.at("psi_se"), dim, "psi_se"));
        } else {
            m.initial = SeState::from_mixed(matrix_from_list(j.at("rho_se"), dim, dim, "rho_se"));
        }
        for (const Json& u : j.at("unitaries"))
            m.unitaries.push_back(matrix_from_list(u, dim, dim, "unitary"));
        return m;
    } catch (const Json::exception& e) {
        throw IoError(std::string("parse: malformed model file: ") + e.what());
    }
}

Json ppt_to_json(const Ppt& ppt) {
    Json j;
    j["format"] = "oqe-ppt/1";
    j["d"] = ppt.d;
    j["k"] = ppt.k;
    j["normalized"] = ppt.normalized;
    Json s0;
    s0["shape"] = {ppt.site0.rows(), ppt.site0.cols()};
    s0["entries"] = matrix_to_list(ppt.site0); // row-major (o, bond)
    j["site0"] = s0;
    Json sites = Json::array();
    for (const PptSite& site : ppt.sites) {
        Json s;
        s["shape"] = {site.chi_left, site.d, site.d, site.chi_right};
        // Row-major over (bond-left, i, o, bond-right).
        Json entries = Json::array();
        for (int a = 0; a < site.chi_left; ++a)
            for (int i = 0; i < site.d; ++i)
                for (int o = 0; o < site.d; ++o)
                    for (int b = 0; b < site.chi_right; ++b) {
                        entries.push_back(site.mat(i, o)(a, b).real());
                        entries.push_back(site.mat(i, o)(a, b).imag());
                    }
        s["entries"] = entries;
        sites.push_back(s);
    }
    j["sites"] = sites;
    return j;
}

Ppt ppt_from_json(const Json& j) {
    try {
        Ppt ppt;
        ppt.d = j.at("d").get<int>();
        ppt.k = j.at("k").get<int>();
        ppt.normalized = j.at("normalized").get<bool>();
        const Json& s0 = j.at("site0");
        const long rows = s0.at("shape")[0].get<long>();
        const long cols = s0.at("shape")[1].get<long>();
        ppt.site0 = matrix_from_list(s0.at("entries"), rows, cols, "site0");
        for (const Json& s : j.at("sites")) {
            PptSite site;
            site.chi_left = s.at("shape")[0].get<int>();
            site.d = s.at("shape")[1].get<int>();
            site.chi_right = s.at("shape")[3].get<int>();
            const Json& entries = s.at("entries");
            const long expect = 2L * site.chi_left * site.d * site.d * site.chi_right;
            if (static_cast<long>(entries.size()) != expect)
                throw IoError("parse: site entry count mismatch");
            site.mats.assign(static_cast<std::size_t>(site.d) * site.d,
                             Matrix(site.chi_left, site.chi_right));
            long idx = 0;
            for (int a = 0; a < site.chi_left; ++a)
                for (int i = 0; i < site.d; ++i)
                    for (int o = 0; o < site.d; ++o)
                        for (int b = 0; b < site.chi_right; ++b) {
                            const double re = entries[idx++].get<double>();
                            const double im = entries[idx++].get<double>();
                            site.mat(i, o)(a, b) = cplx(re, im);
                        }
            ppt.sites.push_back(std::move(site));
        }
        return ppt;
    } catch (const Json::exception& e) {
        throw IoError(std::string("parse: malformed tensor file: ") + e.what());
    }
}

Json transcript_to_json(const TomographyTranscript& t) {
    Json j;
    j["format"] = "oqe-transcript/1";
    j["d"] = t.d;
    j["k"] = t.k;
    j["D_bound"] = t.D_bound;
    j["kappa"] = t.kappa;
    j["f"] = t.f;
    j["epsilon"] = t.epsilon;
    j["seed"] = t.seed;
    Json windows = Json::array();
    for (const WindowRecord& w : t.windows) {
        Json wj;
        wj["window_start"] = w.window_start;
        Json spec = Json::array();
        for (int i = 0; i < w.spectrum.size(); ++i) spec.push_back(w.spectrum[i]);
        wj["spectrum"] = spec;
        wj["leakage"] = w.leakage;
        windows.push_back(wj);
    }
    j["windows"] = windows;
    Json fs = Json::array();
    for (int i = 0; i < t.final_spectrum.size(); ++i) fs.push_back(t.final_spectrum[i]);
    j["final_spectrum"] = fs;
    j["final_leakage"] = t.final_leakage;
    j["retained_env"] = t.retained_env;
    return j;
}

Json fit_report_to_json(const ReconstructedOqe& rec, FitMode mode,
                        const OptimizerSettings& settings) {
    Json j;
    j["format"] = "oqe-fit-report/1";
    j["mode"] = mode == FitMode::time_independent ? "time-independent"
                                                  : "time-dependent";
    j["final_loss"] = rec.final_loss;
    j["settings"] = {{"max_iterations", settings.max_iterations},
                     {"gradient_tolerance", settings.gradient_tolerance},
                     {"restarts", settings.restarts},
                     {"restart_spread", settings.restart_spread},
                     {"restart_seed", settings.restart_seed}};
    Json iters = Json::array();
    for (const IterationRecord& r : rec.iterations) {
        Json ij;
        ij["iteration"] = r.iteration;
        ij["loss"] = r.loss;
        ij["gradient_norm"] = r.gradient_norm;
        iters.push_back(ij);
    }
    j["iterations"] = iters;
    j["model"] = model_to_json(rec.model);
    j["env_gauge"] = matrix_to_list(rec.env_gauge);
    return j;
}

std::string metric_sweep_to_csv(const std::vector<MetricSweepRow>& rows) {
    std::string csv = "j,memory_size,complexity_gamma,gamma,predicted_limit,seed\n";
    for (const MetricSweepRow& r : rows)
        csv += std::to_string(r.j) + "," + std::to_string(r.memory_size) + "," +
               format_double(r.complexity) + "," + format_double(r.gamma) + "," +
               format_double(r.predicted_limit) + "," + std::to_string(r.seed) + "\n";
    return csv;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return ss.str();
}

void save_json(const Json& j, const std::string& path) {
    write_text_file(path, j.dump(2) + "\n");
}

Json load_json(const std::string& path) {
    const std::string text = read_text_file(path);
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError("parse: invalid JSON in " + path);
    return j;
}

} // namespace oqe
