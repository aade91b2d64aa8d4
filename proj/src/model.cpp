#include "orbitfit/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "orbitfit/errors.hpp"

namespace orbitfit {

Dataset::Dataset(Mat points, std::string name) : points_(std::move(points)), name_(std::move(name)) {
    if (points_.rows() < 1 || points_.cols() < 1) throw ConfigError("dataset", "needs at least one point");
    if (!points_.allFinite()) throw ConfigError("dataset", "all coordinates must be finite");
}

double Dataset::support_radius() const { return points_.rowwise().norm().maxCoeff(); }

// --- CSV --------------------------------------------------------------------

namespace {

void append_double(std::string& line, double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    line.append(buf, res.ptr);
}

}  // namespace

void write_csv(const Dataset& data, std::ostream& out) {
    std::string line;
    for (int j = 0; j < data.dim(); ++j) {
        if (j) line += ',';
        line += 'x' + std::to_string(j);
    }
    out << line << '\n';
    for (int i = 0; i < data.size(); ++i) {
        line.clear();
        for (int j = 0; j < data.dim(); ++j) {
            if (j) line += ',';
            append_double(line, data.points()(i, j));
        }
        out << line << '\n';
    }
}

std::string to_csv(const Dataset& data) {
    std::ostringstream os;
    write_csv(data, os);
    return os.str();
}

void write_csv_file(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_csv(data, out);
    if (!out) throw IoError("failed writing " + path);
}

Dataset read_csv(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    int d = 0;
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            if (cell != "x" + std::to_string(d)) {
                throw IoError("CSV header column " + std::to_string(d) + " must be x" + std::to_string(d));
            }
            ++d;
        }
    }
    if (d == 0) throw IoError("CSV header has no columns");

    std::vector<double> values;
    int rows = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (int j = 0; j < d; ++j) {
            double v = 0.0;
            auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc()) throw IoError("CSV line " + std::to_string(line_no) + ": malformed number");
            values.push_back(v);
            p = res.ptr;
            if (j + 1 < d) {
                if (p == end || *p != ',') throw IoError("CSV line " + std::to_string(line_no) + ": too few columns");
                ++p;
            }
        }
        if (p != end) throw IoError("CSV line " + std::to_string(line_no) + ": too many columns");
        ++rows;
    }
    if (rows == 0) throw IoError("CSV has no data rows");
    Mat points = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, d);
    return Dataset(std::move(points), name);
}

Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_csv(in, path);
}

// --- reconstruction maps ------------------------------------------------------

void ReconstructionMap::validate() const {
    if (fields.empty()) throw DimensionError("reconstruction map needs m >= 1");
    if (encoder.size() != m()) throw DimensionError("encoder and field tuples differ in length");
    for (const auto& f : fields)
        if (f.dim() != dim()) throw DimensionError("field dimension differs from xi");
    if (encoder.input_dim() != dim()) throw DimensionError("encoder input dimension differs from xi");
    if (!xi.allFinite()) throw ConfigError("xi", "must be finite");
    flow.validate();
}

Vec ReconstructionMap::operator()(const Vec& x) const {
    const Vec times = encoder(x);
    return compose_flows(fields, std::span<const double>(times.data(), static_cast<std::size_t>(times.size())), xi,
                         flow);
}

int ReconstructionMap::param_count() const {
    int n = encoder.param_count();
    for (const auto& f : fields) n += f.param_count();
    return n;
}

Vec ReconstructionMap::params() const {
    Vec p(param_count());
    const int ne = encoder.param_count();
    p.head(ne) = encoder.params();
    int pos = ne;
    for (const auto& f : fields) {
        p.segment(pos, f.param_count()) = f.params();
        pos += f.param_count();
    }
    return p;
}

void ReconstructionMap::set_params(const Eigen::Ref<const Vec>& p) {
    if (p.size() != param_count()) throw DimensionError("model parameter vector has the wrong length");
    const int ne = encoder.param_count();
    encoder.set_params(p.head(ne));
    int pos = ne;
    for (auto& f : fields) {
        f.set_params(p.segment(pos, f.param_count()));
        pos += f.param_count();
    }
}

Vec reconstruct(const ReconstructionMap& G, const Vec& x) {
    if (x.size() != G.dim()) throw DimensionError("input dimension differs from the model dimension");
    return G(x);
}

Vec reconstruction_errors(const ReconstructionMap& G, const Mat& points) {
    if (points.cols() != G.dim()) throw DimensionError("dataset dimension differs from the model dimension");
    Vec errors(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const Vec x = points.row(i).transpose();
        errors[i] = (x - G(x)).norm();
    }
    return errors;
}

double empirical_risk(const ReconstructionMap& G, const Dataset& S) {
    const Vec errors = reconstruction_errors(G, S.points());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < errors.size(); ++i) sum += errors[i];
    return sum / static_cast<double>(S.size());
}

double weighted_risk(const ReconstructionMap& G, const Mat& points, std::span<const double> weights) {
    if (static_cast<Eigen::Index>(weights.size()) != points.rows()) {
        throw DimensionError("one weight per point is required");
    }
    const Vec errors = reconstruction_errors(G, points);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < errors.size(); ++i) sum += weights[static_cast<std::size_t>(i)] * errors[i];
    return sum;
}

Vec AnchorParam::weights() const {
    const double top = logits.maxCoeff();
    Vec w = (logits.array() - top).exp();
    return w / w.sum();
}

Vec AnchorParam::xi() const { return anchors.transpose() * weights(); }

Vec RiskGradient::flat() const {
    const Vec& tail = logits.size() > 0 ? logits : xi;
    Vec out(encoder.size() + fields.size() + tail.size());
    out << encoder, fields, tail;
    return out;
}

RiskGradient weighted_risk_gradient(const ReconstructionMap& G, const Mat& points, std::span<const double> weights,
                                    const AnchorParam* anchors) {
    G.validate();
    if (points.cols() != G.dim()) throw DimensionError("dataset dimension differs from the model dimension");
    if (static_cast<Eigen::Index>(weights.size()) != points.rows()) {
        throw DimensionError("one weight per point is required");
    }
    const int m = G.m();
    const int d = G.dim();
    const double safety = effective_safety_radius(G.fields, G.flow);

    std::vector<int> enc_offset(static_cast<std::size_t>(m));
    std::vector<int> field_offset(static_cast<std::size_t>(m));
    int enc_total = 0;
    int field_total = 0;
    for (int j = 0; j < m; ++j) {
        enc_offset[static_cast<std::size_t>(j)] = enc_total;
        enc_total += G.encoder.parts()[static_cast<std::size_t>(j)].param_count();
        field_offset[static_cast<std::size_t>(j)] = field_total;
        field_total += G.fields[static_cast<std::size_t>(j)].param_count();
    }

    RiskGradient out;
    out.encoder = Vec::Zero(enc_total);
    out.fields = Vec::Zero(field_total);
    out.xi = Vec::Zero(d);

    std::vector<Vec> enc_grads(static_cast<std::size_t>(m));
    std::vector<LayerSensitivity> layers(static_cast<std::size_t>(m));
    Vec times(m);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double w = weights[static_cast<std::size_t>(i)];
        const Vec x = points.row(i).transpose();
        for (int j = 0; j < m; ++j) {
            const auto& part = G.encoder.parts()[static_cast<std::size_t>(j)];
            enc_grads[static_cast<std::size_t>(j)].resize(part.param_count());
            times[j] = part.value_and_param_gradient(x, enc_grads[static_cast<std::size_t>(j)]);
        }
        Vec state = G.xi;
        for (int j = 0; j < m; ++j) {
            layers[static_cast<std::size_t>(j)] =
                flow_layer_sensitivity(G.fields[static_cast<std::size_t>(j)], state, times[j], G.flow, safety);
            state = layers[static_cast<std::size_t>(j)].state;
        }
        const Vec residual = x - state;
        const double err = residual.norm();
        out.risk += w * err;
        if (err == 0.0 || w == 0.0) continue;

        Vec g = (-w / err) * residual;
        for (int j = m - 1; j >= 0; --j) {
            const auto& layer = layers[static_cast<std::size_t>(j)];
            const double dt = g.dot(layer.d_time);
            const auto& eg = enc_grads[static_cast<std::size_t>(j)];
            out.encoder.segment(enc_offset[static_cast<std::size_t>(j)], eg.size()) += dt * eg;
            out.fields.segment(field_offset[static_cast<std::size_t>(j)], layer.d_params.cols()).noalias() +=
                layer.d_params.transpose() * g;
            g = layer.d_initial.transpose() * g;
        }
        out.xi += g;
    }

    if (anchors) {
        const Vec s = anchors->weights();
        const Vec xi = anchors->anchors.transpose() * s;
        out.logits = Vec(s.size());
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            out.logits[k] = s[k] * (anchors->anchors.row(k).transpose() - xi).dot(out.xi);
        }
    }
    return out;
}

RiskGradient risk_gradient(const ReconstructionMap& G, const Dataset& S, const AnchorParam* anchors) {
    const std::vector<double> weights(static_cast<std::size_t>(S.size()), 1.0 / S.size());
    return weighted_risk_gradient(G, S.points(), weights, anchors);
}

Sampler point_mass_sampler(Vec x) {
    return [x = std::move(x)](Rng&) { return x; };
}

Sampler empirical_sampler(Mat points) {
    if (points.rows() < 1) throw ConfigError("sampler", "needs at least one point");
    return [points = std::move(points)](Rng& rng) {
        std::uniform_int_distribution<Eigen::Index> pick(0, points.rows() - 1);
        return Vec(points.row(pick(rng)).transpose());
    };
}

MonteCarloEstimate mean_and_std_err(std::span<const double> values) {
    MonteCarloEstimate est;
    const double n = static_cast<double>(values.size());
    if (values.empty()) return est;
    double sum = 0.0;
    for (double v : values) sum += v;
    est.mean = sum / n;
    if (values.size() < 2) return est;
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    est.std_err = std::sqrt(ss / (n - 1.0) / n);
    return est;
}

MonteCarloEstimate expected_risk_mc(const ReconstructionMap& G, const Sampler& sampler, int n_mc, std::uint64_t seed) {
    if (n_mc < 2) throw ConfigError("n_mc", "Monte-Carlo estimate needs at least 2 draws");
    Rng rng(seed);
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(n_mc));
    for (int k = 0; k < n_mc; ++k) {
        const Vec x = sampler(rng);
        losses.push_back((x - reconstruct(G, x)).norm());
    }
    return mean_and_std_err(losses);
}

}  // namespace orbitfit
