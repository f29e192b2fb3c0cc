#include "mea/network.hpp"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include <Eigen/Dense>

#include "json.hpp"

namespace mea::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<const Eigen::VectorXd>;

struct LayerView {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
};

std::vector<LayerView> layer_views(const std::vector<int>& sizes) {
    std::vector<LayerView> views;
    std::size_t offset = 0;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        LayerView v;
        v.in = sizes[k];
        v.out = sizes[k + 1];
        v.weight_offset = offset;
        offset += static_cast<std::size_t>(v.in) * static_cast<std::size_t>(v.out);
        v.bias_offset = offset;
        offset += static_cast<std::size_t>(v.out);
        views.push_back(v);
    }
    return views;
}

// Jet blocks are laid out side by side along the columns: value, d/dx1,
// d/dx2, d2/dx1dx1, d2/dx1dx2, d2/dx2dx2.
enum Block { kValue = 0, kD1, kD2, kD11, kD12, kD22, kBlocks };

struct HiddenCache {
    Matrix pre;      // pre-activation jets, width x 6n
    Matrix post;     // activation jets, width x 6n
    Matrix cdf;      // Phi(u) of the value block
    Matrix density;  // phi(u) of the value block
};

void activate(const Matrix& pre, Matrix& post, Matrix& cdf, Matrix& density, Eigen::Index n) {
    const Eigen::Index rows = pre.rows();
    post.resize(rows, pre.cols());
    cdf.resize(rows, n);
    density.resize(rows, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double u = pre(i, j);
            const double Phi = 0.5 * std::erfc(-u * kInvSqrt2);
            const double phi = kInvSqrt2Pi * std::exp(-0.5 * u * u);
            cdf(i, j) = Phi;
            density(i, j) = phi;
            const double g1 = Phi + u * phi;
            const double g2 = phi * (2.0 - u * u);
            const double a1 = pre(i, kD1 * n + j);
            const double a2 = pre(i, kD2 * n + j);
            post(i, kValue * n + j) = u * Phi;
            post(i, kD1 * n + j) = g1 * a1;
            post(i, kD2 * n + j) = g1 * a2;
            post(i, kD11 * n + j) = g2 * a1 * a1 + g1 * pre(i, kD11 * n + j);
            post(i, kD12 * n + j) = g2 * a1 * a2 + g1 * pre(i, kD12 * n + j);
            post(i, kD22 * n + j) = g2 * a2 * a2 + g1 * pre(i, kD22 * n + j);
        }
    }
}

// Converts d(loss)/d(post) into d(loss)/d(pre) in place.
void activate_backward(const HiddenCache& c, Matrix& grad, Eigen::Index n) {
    const Eigen::Index rows = c.pre.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double u = c.pre(i, j);
            const double phi = c.density(i, j);
            const double g1 = c.cdf(i, j) + u * phi;
            const double g2 = phi * (2.0 - u * u);
            const double g3 = phi * (u * u * u - 4.0 * u);
            const double a1 = c.pre(i, kD1 * n + j);
            const double a2 = c.pre(i, kD2 * n + j);
            const double a11 = c.pre(i, kD11 * n + j);
            const double a12 = c.pre(i, kD12 * n + j);
            const double a22 = c.pre(i, kD22 * n + j);
            const double d0 = grad(i, kValue * n + j);
            const double d1 = grad(i, kD1 * n + j);
            const double d2 = grad(i, kD2 * n + j);
            const double d11 = grad(i, kD11 * n + j);
            const double d12 = grad(i, kD12 * n + j);
            const double d22 = grad(i, kD22 * n + j);
            grad(i, kValue * n + j) = d0 * g1 + g2 * (d1 * a1 + d2 * a2 + d11 * a11 + d12 * a12 + d22 * a22) +
                                      g3 * (d11 * a1 * a1 + d12 * a1 * a2 + d22 * a2 * a2);
            grad(i, kD1 * n + j) = d1 * g1 + g2 * (2.0 * d11 * a1 + d12 * a2);
            grad(i, kD2 * n + j) = d2 * g1 + g2 * (2.0 * d22 * a2 + d12 * a1);
            grad(i, kD11 * n + j) = d11 * g1;
            grad(i, kD12 * n + j) = d12 * g1;
            grad(i, kD22 * n + j) = d22 * g1;
        }
    }
}

Matrix input_jets(std::span<const Point> points, const InputNormalization& norm) {
    const auto n = static_cast<Eigen::Index>(points.size());
    Matrix x = Matrix::Zero(2, kBlocks * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& p = points[static_cast<std::size_t>(j)];
        x(0, kValue * n + j) = (p.x1 - norm.center.x1) / norm.scale.x1;
        x(1, kValue * n + j) = (p.x2 - norm.center.x2) / norm.scale.x2;
        x(0, kD1 * n + j) = 1.0 / norm.scale.x1;
        x(1, kD2 * n + j) = 1.0 / norm.scale.x2;
    }
    return x;
}

struct ForwardPass {
    Matrix input;
    std::vector<HiddenCache> hidden;
    Matrix output;  // 1 x 6n
};

ForwardPass run_forward(const std::vector<int>& sizes, std::span<const double> params,
                        const InputNormalization& norm, std::span<const Point> points) {
    const auto views = layer_views(sizes);
    const auto n = static_cast<Eigen::Index>(points.size());
    ForwardPass fp;
    fp.input = input_jets(points, norm);
    fp.hidden.resize(views.size() - 1);
    const Matrix* prev = &fp.input;
    for (std::size_t k = 0; k < views.size(); ++k) {
        const auto& v = views[k];
        MatrixMap w(params.data() + v.weight_offset, v.out, v.in);
        VectorMap b(params.data() + v.bias_offset, v.out);
        Matrix& z = k + 1 < views.size() ? fp.hidden[k].pre : fp.output;
        z.noalias() = w * (*prev);
        z.leftCols(n).colwise() += b;
        if (k + 1 < views.size()) {
            auto& c = fp.hidden[k];
            activate(c.pre, c.post, c.cdf, c.density, n);
            prev = &c.post;
        }
    }
    return fp;
}

Jet output_jet(const Matrix& out, Eigen::Index n, Eigen::Index j) {
    return {out(0, kValue * n + j), out(0, kD1 * n + j),  out(0, kD2 * n + j),
            out(0, kD11 * n + j),   out(0, kD12 * n + j), out(0, kD22 * n + j)};
}

}  // namespace

GeluDerivatives gelu(double u) {
    const double Phi = 0.5 * std::erfc(-u * kInvSqrt2);
    const double phi = kInvSqrt2Pi * std::exp(-0.5 * u * u);
    return {u * Phi, Phi + u * phi, phi * (2.0 - u * u), phi * (u * u * u - 4.0 * u)};
}

Jet gelu_jet(const Jet& u) {
    const auto g = gelu(u.f);
    return {g.g0,
            g.g1 * u.f1,
            g.g1 * u.f2,
            g.g2 * u.f1 * u.f1 + g.g1 * u.f11,
            g.g2 * u.f1 * u.f2 + g.g1 * u.f12,
            g.g2 * u.f2 * u.f2 + g.g1 * u.f22};
}

Mlp::Mlp(std::vector<int> layer_sizes, InputNormalization normalization)
    : sizes_(std::move(layer_sizes)), norm_(normalization) {
    if (sizes_.size() < 3 || sizes_.front() != 2 || sizes_.back() != 1)
        throw ConfigError("network layer sizes must be [2, W.., 1] with at least one hidden layer");
    for (int s : sizes_)
        if (s < 1) throw ConfigError("network layer widths must be positive");
    if (!(norm_.scale.x1 > 0.0) || !(norm_.scale.x2 > 0.0))
        throw ConfigError("input normalization scale must be positive");
    params_.assign(parameter_count(sizes_), 0.0);
}

Mlp Mlp::init(int hidden_layers, int width, InputNormalization normalization, std::uint64_t seed) {
    if (hidden_layers < 1 || width < 1) throw ConfigError("network needs L >= 1 and W >= 1");
    std::vector<int> sizes{2};
    for (int i = 0; i < hidden_layers; ++i) sizes.push_back(width);
    sizes.push_back(1);
    Mlp net(sizes, normalization);
    Rng rng(seed);
    for (const auto& v : layer_views(net.sizes_)) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(v.in));
        const std::size_t count = static_cast<std::size_t>(v.in) * static_cast<std::size_t>(v.out);
        for (std::size_t i = 0; i < count; ++i) net.params_[v.weight_offset + i] = uniform(rng, -bound, bound);
    }
    return net;
}

std::size_t Mlp::parameter_count(std::span<const int> layer_sizes) {
    std::size_t count = 0;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k)
        count += static_cast<std::size_t>(layer_sizes[k] + 1) * static_cast<std::size_t>(layer_sizes[k + 1]);
    return count;
}

void Mlp::set_params(std::span<const double> values) {
    if (values.size() != params_.size()) throw ConfigError("parameter vector length mismatch");
    std::copy(values.begin(), values.end(), params_.begin());
}

Jet Mlp::forward_jet(const Point& p) const {
    const auto fp = run_forward(sizes_, params_, norm_, std::span<const Point>(&p, 1));
    const Jet jet = output_jet(fp.output, 1, 0);
    if (!jet.finite()) throw DivergenceError("network output is not finite");
    return jet;
}

std::vector<Jet> Mlp::forward_jets(std::span<const Point> points) const {
    std::vector<Jet> jets;
    jets.reserve(points.size());
    constexpr std::size_t chunk = 1024;
    for (std::size_t start = 0; start < points.size(); start += chunk) {
        const auto sub = points.subspan(start, std::min(chunk, points.size() - start));
        const auto fp = run_forward(sizes_, params_, norm_, sub);
        const auto n = static_cast<Eigen::Index>(sub.size());
        for (Eigen::Index j = 0; j < n; ++j) {
            jets.push_back(output_jet(fp.output, n, j));
            if (!jets.back().finite()) throw DivergenceError("network output is not finite");
        }
    }
    return jets;
}

std::vector<double> Mlp::forward_values(std::span<const Point> points) const {
    std::vector<double> values;
    values.reserve(points.size());
    const auto views = layer_views(sizes_);
    constexpr std::size_t chunk = 1024;
    for (std::size_t start = 0; start < points.size(); start += chunk) {
        const auto sub = points.subspan(start, std::min(chunk, points.size() - start));
        const auto n = static_cast<Eigen::Index>(sub.size());
        Matrix a(2, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            a(0, j) = (sub[static_cast<std::size_t>(j)].x1 - norm_.center.x1) / norm_.scale.x1;
            a(1, j) = (sub[static_cast<std::size_t>(j)].x2 - norm_.center.x2) / norm_.scale.x2;
        }
        Matrix z;
        for (std::size_t k = 0; k < views.size(); ++k) {
            const auto& v = views[k];
            MatrixMap w(params_.data() + v.weight_offset, v.out, v.in);
            VectorMap b(params_.data() + v.bias_offset, v.out);
            z.noalias() = w * a;
            z.colwise() += b;
            if (k + 1 < views.size()) {
                a = z.unaryExpr([](double u) { return 0.5 * u * std::erfc(-u * kInvSqrt2); });
            }
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!std::isfinite(z(0, j))) throw DivergenceError("network output is not finite");
            values.push_back(z(0, j));
        }
    }
    return values;
}

double Mlp::loss_and_gradient(std::span<const Point> points, const PointLoss& loss, std::span<double> grad,
                              std::size_t chunk) const {
    if (grad.size() != params_.size()) throw ConfigError("gradient buffer length mismatch");
    if (chunk == 0) chunk = points.size();
    std::fill(grad.begin(), grad.end(), 0.0);
    const auto views = layer_views(sizes_);
    double total = 0.0;

    for (std::size_t start = 0; start < points.size(); start += chunk) {
        const auto sub = points.subspan(start, std::min(chunk, points.size() - start));
        const auto n = static_cast<Eigen::Index>(sub.size());
        const auto fp = run_forward(sizes_, params_, norm_, sub);

        Matrix dz(1, kBlocks * n);
        for (Eigen::Index j = 0; j < n; ++j) {
            Jet g;
            total += loss(start + static_cast<std::size_t>(j), output_jet(fp.output, n, j), g);
            dz(0, kValue * n + j) = g.f;
            dz(0, kD1 * n + j) = g.f1;
            dz(0, kD2 * n + j) = g.f2;
            dz(0, kD11 * n + j) = g.f11;
            dz(0, kD12 * n + j) = g.f12;
            dz(0, kD22 * n + j) = g.f22;
        }

        for (std::size_t kk = views.size(); kk-- > 0;) {
            const auto& v = views[kk];
            const Matrix& prev = kk == 0 ? fp.input : fp.hidden[kk - 1].post;
            Eigen::Map<Matrix> gw(grad.data() + v.weight_offset, v.out, v.in);
            Eigen::Map<Eigen::VectorXd> gb(grad.data() + v.bias_offset, v.out);
            gw.noalias() += dz * prev.transpose();
            gb += dz.leftCols(n).rowwise().sum();
            if (kk == 0) break;
            MatrixMap w(params_.data() + v.weight_offset, v.out, v.in);
            Matrix dprev = w.transpose() * dz;
            activate_backward(fp.hidden[kk - 1], dprev, n);
            dz = std::move(dprev);
        }
    }

    if (!std::isfinite(total)) throw DivergenceError("loss is not finite");
    for (double g : grad)
        if (!std::isfinite(g)) throw DivergenceError("gradient is not finite");
    return total;
}

void Mlp::save(std::ostream& out, std::uint64_t seed) const {
    nlohmann::json header;
    header["format"] = "mea-mlp";
    header["version"] = 1;
    header["layer_sizes"] = sizes_;
    header["seed"] = seed;
    header["normalization"] = {{"center", {norm_.center.x1, norm_.center.x2}},
                               {"scale", {norm_.scale.x1, norm_.scale.x2}}};
    header["parameter_count"] = params_.size();
    out << header.dump() << '\n';
    static_assert(sizeof(double) == 8);
    out.write(reinterpret_cast<const char*>(params_.data()),
              static_cast<std::streamsize>(params_.size() * sizeof(double)));
    if (!out) throw Error("failed to write network checkpoint");
}

Mlp Mlp::load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty network checkpoint");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad network checkpoint header: ") + e.what());
    }
    if (header.value("format", "") != "mea-mlp") throw ConfigError("not a network checkpoint");
    InputNormalization norm;
    norm.center = {header["normalization"]["center"][0], header["normalization"]["center"][1]};
    norm.scale = {header["normalization"]["scale"][0], header["normalization"]["scale"][1]};
    Mlp net(header["layer_sizes"].get<std::vector<int>>(), norm);
    if (header["parameter_count"].get<std::size_t>() != net.size())
        throw ConfigError("checkpoint parameter count does not match layer sizes");
    in.read(reinterpret_cast<char*>(net.params_.data()), static_cast<std::streamsize>(net.size() * sizeof(double)));
    if (!in) throw ConfigError("truncated network checkpoint");
    return net;
}

}  // namespace mea::nn
