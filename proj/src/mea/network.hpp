#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mea/types.hpp"

namespace mea::nn {

/// GELU g(u) = u Phi(u) with the exact normal CDF, and its first three
/// derivatives.
struct GeluDerivatives {
    double g0 = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
    double g3 = 0.0;
};

GeluDerivatives gelu(double u);

/// Second-order jet of g(u(x1, x2)) from the jet of u.
Jet gelu_jet(const Jet& u);

/// Affine map from plan coordinates onto roughly [-1, 1]^2.
struct InputNormalization {
    Point center;
    Point scale{1.0, 1.0};
};

/// Per-point loss term l_i(jet) for a batch: returns l_i and writes dl_i/djet.
using PointLoss = std::function<double(std::size_t index, const Jet& jet, Jet& grad)>;

/// Fully connected network R^2 -> R with GELU hidden layers. Parameters live
/// in one flat vector, layer by layer: weight matrix (out x in, column-major)
/// followed by the bias vector.
class Mlp {
  public:
    Mlp() = default;
    Mlp(std::vector<int> layer_sizes, InputNormalization normalization);

    /// Hidden depth `hidden_layers` and width `width`, weights uniform in
    /// +-1/sqrt(fan_in), zero biases.
    static Mlp init(int hidden_layers, int width, InputNormalization normalization, std::uint64_t seed);

    static std::size_t parameter_count(std::span<const int> layer_sizes);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int hidden_layers() const { return static_cast<int>(sizes_.size()) - 2; }
    const InputNormalization& normalization() const { return norm_; }
    std::size_t size() const { return params_.size(); }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    void set_params(std::span<const double> values);

    /// Exact value, gradient and Hessian of the network output at p.
    /// Throws DivergenceError on non-finite output.
    Jet forward_jet(const Point& p) const;

    std::vector<Jet> forward_jets(std::span<const Point> points) const;

    /// Output values only; much cheaper than the jets.
    std::vector<double> forward_values(std::span<const Point> points) const;

    /// sum_i loss(i, jet_i) over the batch, with its exact gradient in the
    /// parameters accumulated into `grad` (overwritten). Points are processed
    /// in fixed-size chunks in order, so the result is deterministic.
    double loss_and_gradient(std::span<const Point> points, const PointLoss& loss, std::span<double> grad,
                             std::size_t chunk = 1024) const;

    /// Flat little-endian binary checkpoint preceded by a one-line JSON header.
    void save(std::ostream& out, std::uint64_t seed = 0) const;
    static Mlp load(std::istream& in);

  private:
    std::vector<int> sizes_;
    InputNormalization norm_;
    std::vector<double> params_;
};

}  // namespace mea::nn
