#include "orbitfit/data.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "orbitfit/errors.hpp"

namespace orbitfit {

std::string to_string(Shape shape) {
    switch (shape) {
        case Shape::Segment: return "segment";
        case Shape::Circle: return "circle";
        case Shape::Helix: return "helix";
        case Shape::SphereCap: return "sphere_cap";
        case Shape::SwissRoll: return "swiss_roll";
    }
    return "";
}

Shape shape_from_string(const std::string& name) {
    for (Shape s : {Shape::Segment, Shape::Circle, Shape::Helix, Shape::SphereCap, Shape::SwissRoll}) {
        if (to_string(s) == name) return s;
    }
    throw ConfigError("data.shape", "unknown shape '" + name + "'");
}

int native_dim(Shape shape) {
    switch (shape) {
        case Shape::Segment: return 1;
        case Shape::Circle: return 2;
        case Shape::Helix:
        case Shape::SphereCap:
        case Shape::SwissRoll: return 3;
    }
    return 0;
}

double shape_radius(Shape shape) {
    switch (shape) {
        case Shape::Segment:
        case Shape::Circle:
        case Shape::SphereCap: return 1.0;
        case Shape::Helix:
        case Shape::SwissRoll: return std::numbers::sqrt2;
    }
    return 0.0;
}

void GeneratorSpec::validate() const {
    if (n < 1) throw ConfigError("data.n", "must be >= 1");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
        throw ConfigError("data.noise_sigma", "must be a nonnegative finite number");
    }
    if (d < native_dim(shape)) {
        throw ConfigError("data.d", to_string(shape) + " needs ambient dimension >= " +
                                        std::to_string(native_dim(shape)));
    }
}

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCapAngle = kPi / 3.0;
constexpr double kRollStart = 1.5 * kPi;
constexpr double kRollEnd = 4.5 * kPi;

// Shape parameters in [0,1]^2 -> native coordinates.
Vec shape_point(Shape shape, double s, double r) {
    switch (shape) {
        case Shape::Segment:
            return Vec::Constant(1, s);
        case Shape::Circle: {
            const double theta = 2.0 * kPi * s;
            return Vec{{std::cos(theta), std::sin(theta)}};
        }
        case Shape::Helix: {
            const double theta = 4.0 * kPi * s;
            return Vec{{std::cos(theta), std::sin(theta), s}};
        }
        case Shape::SphereCap: {
            // Area-uniform: cos(polar) uniform on [cos(cap), 1].
            const double z = 1.0 - s * (1.0 - std::cos(kCapAngle));
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = 2.0 * kPi * r;
            return Vec{{rho * std::cos(phi), rho * std::sin(phi), z}};
        }
        case Shape::SwissRoll: {
            const double t = kRollStart + (kRollEnd - kRollStart) * s;
            return Vec{{t * std::cos(t) / kRollEnd, r, t * std::sin(t) / kRollEnd}};
        }
    }
    return {};
}

// Deterministic parameters for the k-th of n linspace points.
std::pair<double, double> linspace_params(Shape shape, int k, int n) {
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    switch (shape) {
        case Shape::Circle:
            // Periodic: the endpoint would duplicate the start.
            return {static_cast<double>(k) / n, 0.0};
        case Shape::SphereCap:
            return {(k + 0.5) / n, std::fmod(k * golden, 1.0)};
        case Shape::SwissRoll:
            return {n == 1 ? 0.0 : static_cast<double>(k) / (n - 1), std::fmod(k * golden, 1.0)};
        default:
            return {n == 1 ? 0.0 : static_cast<double>(k) / (n - 1), 0.0};
    }
}

Mat random_orthogonal(int d, Rng& rng) {
    Mat g(d, d);
    for (int j = 0; j < d; ++j) g.col(j) = gaussian_vector(rng, d);
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    // Sign fix makes the draw Haar-distributed.
    const Mat r = qr.matrixQR();
    for (int j = 0; j < d; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

class Embedding {
public:
    Embedding(const GeneratorSpec& spec, Rng& rng) : spec_(spec) {
        if (spec.embed) q_ = random_orthogonal(spec.d, rng);
    }

    Vec operator()(const Vec& native, Rng& rng) const {
        Vec x = Vec::Zero(spec_.d);
        x.head(native.size()) = native;
        if (q_.size() > 0) x = q_ * x;
        if (spec_.noise_sigma > 0.0) {
            Vec noise = spec_.noise_sigma * gaussian_vector(rng, spec_.d);
            const double cap = 3.0 * spec_.noise_sigma;
            const double norm = noise.norm();
            if (norm > cap) noise *= cap / norm;
            x += noise;
        }
        return x;
    }

private:
    GeneratorSpec spec_;
    Mat q_;
};

}  // namespace

Dataset generate(const GeneratorSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Embedding embed(spec, rng);
    Mat points(spec.n, spec.d);
    for (int k = 0; k < spec.n; ++k) {
        double s = 0.0;
        double r = 0.0;
        if (spec.sampling == SamplingMode::Linspace) {
            std::tie(s, r) = linspace_params(spec.shape, k, spec.n);
        } else {
            s = uniform(rng, 0.0, 1.0);
            r = uniform(rng, 0.0, 1.0);
        }
        points.row(k) = embed(shape_point(spec.shape, s, r), rng).transpose();
    }
    return Dataset(std::move(points), to_string(spec.shape));
}

Sampler shape_sampler(const GeneratorSpec& spec) {
    spec.validate();
    Rng setup(spec.seed);
    Embedding embed(spec, setup);
    return [embed = std::move(embed), shape = spec.shape](Rng& rng) {
        const double s = uniform(rng, 0.0, 1.0);
        const double r = uniform(rng, 0.0, 1.0);
        return embed(shape_point(shape, s, r), rng);
    };
}

std::pair<Dataset, Dataset> split(const Dataset& S, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("data.train_fraction", "must lie strictly between 0 and 1");
    }
    const int n = S.size();
    const int n_train = static_cast<int>(std::lround(train_fraction * n));
    if (n_train < 1 || n_train >= n) throw ConfigError("data.train_fraction", "leaves one side of the split empty");
    std::vector<int> index(static_cast<std::size_t>(n));
    std::iota(index.begin(), index.end(), 0);
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(pick(rng))]);
    }
    Mat train(n_train, S.dim());
    Mat test(n - n_train, S.dim());
    for (int i = 0; i < n; ++i) {
        const auto row = S.points().row(index[static_cast<std::size_t>(i)]);
        if (i < n_train) {
            train.row(i) = row;
        } else {
            test.row(i - n_train) = row;
        }
    }
    return {Dataset(std::move(train), S.name() + "_train"), Dataset(std::move(test), S.name() + "_test")};
}

}  // namespace orbitfit
