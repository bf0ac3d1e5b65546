#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "fieldprune/core/errors.hpp"
#include "fieldprune/core/fs.hpp"
#include "fieldprune/core/hash.hpp"
#include "fieldprune/core/rng.hpp"
#include "fieldprune/field/encoding.hpp"
#include "fieldprune/geometry/camera.hpp"

namespace fieldprune {

struct MlpConfig {
  int hidden_dim = 64;
  int hidden_layers = 4;
  int l_pos = 6;  // position frequencies
  int l_dir = 2;  // direction frequencies

  int pos_dim() const { return encoded_dim(l_pos); }
  int dir_dim() const { return encoded_dim(l_dir); }

  void validate() const {
    if (hidden_dim < 1 || hidden_layers < 1)
      throw ConfigError("mlp: hidden_dim and hidden_layers must be >= 1");
    if (l_pos < 0 || l_dir < 0) throw ConfigError("mlp: negative frequency count");
  }

  nlohmann::json to_json() const {
    return {{"hidden_dim", hidden_dim},
            {"hidden_layers", hidden_layers},
            {"l_pos", l_pos},
            {"l_dir", l_dir}};
  }
  static MlpConfig from_json(const nlohmann::json& j) {
    MlpConfig c;
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
    c.l_pos = j.value("l_pos", c.l_pos);
    c.l_dir = j.value("l_dir", c.l_dir);
    c.validate();
    return c;
  }
};

inline double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}
inline double logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// Radiance-field MLP parameters stored as one flat vector.
///
/// The density path consumes only encoded position; the encoded direction
/// joins in front of the color head, so density is invariant to direction
/// by construction. Flat layout, in order:
///   trunk W_0 (h x pos_dim), b_0, W_1..W_{n-1} (h x h), b_1..;
///   sigma_w (1 x h), sigma_b;
///   color_w (h x (h + dir_dim)), color_b;
///   out_w (3 x h), out_b          <- the designated "last layer" tail.
class FieldParams {
 public:
  FieldParams() { compute_layout(); }
  explicit FieldParams(const MlpConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    compute_layout();
    theta_ = Eigen::VectorXd::Zero(total_);
  }

  static FieldParams random_init(const MlpConfig& cfg, std::uint64_t seed) {
    FieldParams p(cfg);
    auto rng = make_rng(seed, 0x11e1d);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](Eigen::Map<Eigen::MatrixXd> w, int fan_in) {
      const double s = std::sqrt(2.0 / fan_in);
      for (int c = 0; c < w.cols(); ++c)
        for (int r = 0; r < w.rows(); ++r) w(r, c) = s * normal(rng);
    };
    for (int l = 0; l < cfg.hidden_layers; ++l)
      fill(p.trunk_w(l), l == 0 ? cfg.pos_dim() : cfg.hidden_dim);
    fill(p.sigma_w(), cfg.hidden_dim);
    fill(p.color_w(), cfg.hidden_dim + cfg.dir_dim());
    fill(p.out_w(), cfg.hidden_dim);
    return p;
  }

  const MlpConfig& config() const { return cfg_; }
  int parameter_count() const { return total_; }
  Eigen::VectorXd& flat() { return theta_; }
  const Eigen::VectorXd& flat() const { return theta_; }

  int last_layer_offset() const { return last_offset_; }
  int last_layer_size() const { return total_ - last_offset_; }
  Eigen::VectorXd last_layer() const { return theta_.tail(last_layer_size()); }

  // Structured views into the flat vector.
  Eigen::Map<Eigen::MatrixXd> trunk_w(int l) { return map(trunk_w_off_[l], cfg_.hidden_dim, l == 0 ? cfg_.pos_dim() : cfg_.hidden_dim); }
  Eigen::Map<const Eigen::MatrixXd> trunk_w(int l) const { return cmap(trunk_w_off_[l], cfg_.hidden_dim, l == 0 ? cfg_.pos_dim() : cfg_.hidden_dim); }
  Eigen::Map<Eigen::VectorXd> trunk_b(int l) { return vmap(trunk_b_off_[l], cfg_.hidden_dim); }
  Eigen::Map<const Eigen::VectorXd> trunk_b(int l) const { return cvmap(trunk_b_off_[l], cfg_.hidden_dim); }
  Eigen::Map<Eigen::MatrixXd> sigma_w() { return map(sigma_w_off_, 1, cfg_.hidden_dim); }
  Eigen::Map<const Eigen::MatrixXd> sigma_w() const { return cmap(sigma_w_off_, 1, cfg_.hidden_dim); }
  double& sigma_b() { return theta_[sigma_b_off_]; }
  double sigma_b() const { return theta_[sigma_b_off_]; }
  Eigen::Map<Eigen::MatrixXd> color_w() { return map(color_w_off_, cfg_.hidden_dim, cfg_.hidden_dim + cfg_.dir_dim()); }
  Eigen::Map<const Eigen::MatrixXd> color_w() const { return cmap(color_w_off_, cfg_.hidden_dim, cfg_.hidden_dim + cfg_.dir_dim()); }
  Eigen::Map<Eigen::VectorXd> color_b() { return vmap(color_b_off_, cfg_.hidden_dim); }
  Eigen::Map<const Eigen::VectorXd> color_b() const { return cvmap(color_b_off_, cfg_.hidden_dim); }
  Eigen::Map<Eigen::MatrixXd> out_w() { return map(out_w_off_, 3, cfg_.hidden_dim); }
  Eigen::Map<const Eigen::MatrixXd> out_w() const { return cmap(out_w_off_, 3, cfg_.hidden_dim); }
  Eigen::Map<Eigen::VectorXd> out_b() { return vmap(out_b_off_, 3); }
  Eigen::Map<const Eigen::VectorXd> out_b() const { return cvmap(out_b_off_, 3); }

  struct GradViews;  // same layout over an external flat gradient vector

  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv_config();
    return fnv1a64(theta_.data(), sizeof(double) * theta_.size(), h);
  }

 private:
  std::uint64_t fnv_config() const {
    const int ints[4] = {cfg_.hidden_dim, cfg_.hidden_layers, cfg_.l_pos, cfg_.l_dir};
    return fnv1a64(ints, sizeof(ints));
  }
  Eigen::Map<Eigen::MatrixXd> map(int off, int r, int c) {
    return {theta_.data() + off, r, c};
  }
  Eigen::Map<const Eigen::MatrixXd> cmap(int off, int r, int c) const {
    return {theta_.data() + off, r, c};
  }
  Eigen::Map<Eigen::VectorXd> vmap(int off, int n) { return {theta_.data() + off, n}; }
  Eigen::Map<const Eigen::VectorXd> cvmap(int off, int n) const {
    return {theta_.data() + off, n};
  }

  void compute_layout() {
    const int h = cfg_.hidden_dim;
    int off = 0;
    trunk_w_off_.resize(cfg_.hidden_layers);
    trunk_b_off_.resize(cfg_.hidden_layers);
    for (int l = 0; l < cfg_.hidden_layers; ++l) {
      const int in = (l == 0) ? cfg_.pos_dim() : h;
      trunk_w_off_[l] = off;
      off += h * in;
      trunk_b_off_[l] = off;
      off += h;
    }
    sigma_w_off_ = off;
    off += h;
    sigma_b_off_ = off;
    off += 1;
    color_w_off_ = off;
    off += h * (h + cfg_.dir_dim());
    color_b_off_ = off;
    off += h;
    last_offset_ = off;
    out_w_off_ = off;
    off += 3 * h;
    out_b_off_ = off;
    off += 3;
    total_ = off;
  }

  MlpConfig cfg_;
  Eigen::VectorXd theta_;
  std::vector<int> trunk_w_off_, trunk_b_off_;
  int sigma_w_off_ = 0, sigma_b_off_ = 0;
  int color_w_off_ = 0, color_b_off_ = 0;
  int out_w_off_ = 0, out_b_off_ = 0;
  int last_offset_ = 0, total_ = 0;
};

/// Forward/backward engine over one ray's samples. Owns its scratch buffers
/// so per-ray evaluation allocates nothing after warmup; one instance per
/// thread.
class FieldEvaluator {
 public:
  explicit FieldEvaluator(const FieldParams& params) : p_(params) {}

  /// positions: 3 x M sample points; dir must be unit length.
  void forward(const Eigen::Matrix3Xd& positions, const Vec3& dir) {
    const auto& cfg = p_.config();
    const int m = static_cast<int>(positions.cols());
    const int h = cfg.hidden_dim;

    x_enc_.resize(cfg.pos_dim(), m);
    for (int i = 0; i < m; ++i)
      encode_into(positions.col(i), cfg.l_pos, x_enc_.col(i).data());
    dir_enc_.resize(cfg.dir_dim());
    encode_into(dir, cfg.l_dir, dir_enc_.data());

    trunk_z_.resize(cfg.hidden_layers);
    trunk_a_.resize(cfg.hidden_layers);
    for (int l = 0; l < cfg.hidden_layers; ++l) {
      const Eigen::MatrixXd& in = (l == 0) ? x_enc_ : trunk_a_[l - 1];
      trunk_z_[l].noalias() = p_.trunk_w(l) * in;
      trunk_z_[l].colwise() += p_.trunk_b(l);
      trunk_a_[l] = trunk_z_[l].cwiseMax(0.0);
    }
    const Eigen::MatrixXd& feat = trunk_a_.back();

    sigma_raw_.noalias() = p_.sigma_w() * feat;
    sigma_raw_.array() += p_.sigma_b();
    sigma_.resize(1, m);
    for (int i = 0; i < m; ++i) sigma_(0, i) = softplus(sigma_raw_(0, i));

    color_in_.resize(h + cfg.dir_dim(), m);
    color_in_.topRows(h) = feat;
    color_in_.bottomRows(cfg.dir_dim()).colwise() = dir_enc_;
    color_z_.noalias() = p_.color_w() * color_in_;
    color_z_.colwise() += p_.color_b();
    color_a_ = color_z_.cwiseMax(0.0);

    rgb_raw_.noalias() = p_.out_w() * color_a_;
    rgb_raw_.colwise() += p_.out_b();
    rgb_.resize(3, m);
    for (int i = 0; i < m; ++i)
      for (int c = 0; c < 3; ++c) rgb_(c, i) = logistic(rgb_raw_(c, i));
  }

  const Eigen::MatrixXd& sigma() const { return sigma_; }  // 1 x M
  const Eigen::MatrixXd& rgb() const { return rgb_; }      // 3 x M

  /// Accumulates d(loss)/d(theta) into grad given d(loss)/d(sigma) and
  /// d(loss)/d(rgb) for the samples of the last forward() call.
  void backward(const Eigen::RowVectorXd& d_sigma, const Eigen::MatrixXd& d_rgb,
                Eigen::VectorXd& grad) const {
    const auto& cfg = p_.config();
    const int h = cfg.hidden_dim;
    const int m = static_cast<int>(sigma_.cols());
    FieldParams::GradViews g(grad, p_);

    // through the output nonlinearities
    buf_rgb_ = d_rgb.cwiseProduct(rgb_.cwiseProduct((1.0 - rgb_.array()).matrix()));
    buf_sig_.resize(1, m);
    for (int i = 0; i < m; ++i)
      buf_sig_(0, i) = d_sigma(i) * logistic(sigma_raw_(0, i));

    // last layer
    g.out_w.noalias() += buf_rgb_ * color_a_.transpose();
    g.out_b.noalias() += buf_rgb_.rowwise().sum();

    // color hidden layer
    d_color_a_.noalias() = p_.out_w().transpose() * buf_rgb_;
    d_color_a_ = d_color_a_.cwiseProduct(
        (color_z_.array() > 0.0).cast<double>().matrix());
    g.color_w.noalias() += d_color_a_ * color_in_.transpose();
    g.color_b.noalias() += d_color_a_.rowwise().sum();

    // into the trunk: color branch + density head
    d_feat_.noalias() = p_.color_w().topRows(h).transpose() * d_color_a_;
    d_feat_.noalias() += p_.sigma_w().transpose() * buf_sig_;
    g.sigma_w.noalias() += buf_sig_ * trunk_a_.back().transpose();
    g.sigma_b(0) += buf_sig_.sum();

    for (int l = cfg.hidden_layers - 1; l >= 0; --l) {
      d_feat_ = d_feat_.cwiseProduct(
          (trunk_z_[l].array() > 0.0).cast<double>().matrix());
      const Eigen::MatrixXd& in = (l == 0) ? x_enc_ : trunk_a_[l - 1];
      g.trunk_w[l].noalias() += d_feat_ * in.transpose();
      g.trunk_b[l].noalias() += d_feat_.rowwise().sum();
      if (l > 0) d_feat_ = p_.trunk_w(l).transpose() * d_feat_;
    }
  }

 private:
  const FieldParams& p_;
  Eigen::MatrixXd x_enc_;
  Eigen::VectorXd dir_enc_;
  std::vector<Eigen::MatrixXd> trunk_z_, trunk_a_;
  Eigen::MatrixXd sigma_raw_, sigma_;
  Eigen::MatrixXd color_in_, color_z_, color_a_;
  Eigen::MatrixXd rgb_raw_, rgb_;
  mutable Eigen::MatrixXd buf_rgb_, buf_sig_, d_color_a_, d_feat_;
};

struct FieldParams::GradViews {
  GradViews(Eigen::VectorXd& grad, const FieldParams& like) {
    const auto& cfg = like.cfg_;
    if (grad.size() != like.total_)
      throw NumericError("gradient buffer size mismatch");
    double* base = grad.data();
    for (int l = 0; l < cfg.hidden_layers; ++l) {
      const int in = (l == 0) ? cfg.pos_dim() : cfg.hidden_dim;
      trunk_w.emplace_back(base + like.trunk_w_off_[l], cfg.hidden_dim, in);
      trunk_b.emplace_back(base + like.trunk_b_off_[l], cfg.hidden_dim);
    }
    new (&sigma_w) Eigen::Map<Eigen::MatrixXd>(base + like.sigma_w_off_, 1, cfg.hidden_dim);
    new (&sigma_b) Eigen::Map<Eigen::VectorXd>(base + like.sigma_b_off_, 1);
    new (&color_w) Eigen::Map<Eigen::MatrixXd>(base + like.color_w_off_, cfg.hidden_dim, cfg.hidden_dim + cfg.dir_dim());
    new (&color_b) Eigen::Map<Eigen::VectorXd>(base + like.color_b_off_, cfg.hidden_dim);
    new (&out_w) Eigen::Map<Eigen::MatrixXd>(base + like.out_w_off_, 3, cfg.hidden_dim);
    new (&out_b) Eigen::Map<Eigen::VectorXd>(base + like.out_b_off_, 3);
  }

  std::vector<Eigen::Map<Eigen::MatrixXd>> trunk_w;
  std::vector<Eigen::Map<Eigen::VectorXd>> trunk_b;
  Eigen::Map<Eigen::MatrixXd> sigma_w{nullptr, 0, 0};
  Eigen::Map<Eigen::VectorXd> sigma_b{nullptr, 0};
  Eigen::Map<Eigen::MatrixXd> color_w{nullptr, 0, 0};
  Eigen::Map<Eigen::VectorXd> color_b{nullptr, 0};
  Eigen::Map<Eigen::MatrixXd> out_w{nullptr, 0, 0};
  Eigen::Map<Eigen::VectorXd> out_b{nullptr, 0};
};

/// Single-point field query.
inline void field_eval(const FieldParams& params, const Vec3& x, const Vec3& d,
                       Vec3& rgb, double& sigma) {
  FieldEvaluator eval(params);
  Eigen::Matrix3Xd pos(3, 1);
  pos.col(0) = x;
  eval.forward(pos, d);
  rgb = eval.rgb().col(0);
  sigma = eval.sigma()(0, 0);
}

inline void save_checkpoint(const std::string& path, const FieldParams& params) {
  nlohmann::json j;
  j["version"] = 1;
  j["mlp"] = params.config().to_json();
  std::vector<double> theta(params.flat().data(),
                            params.flat().data() + params.flat().size());
  j["theta"] = theta;
  atomic_write_file(path, j.dump() + "\n");
}

inline FieldParams load_checkpoint(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path + ": " + e.what());
  }
  if (j.value("version", 0) != 1)
    throw DataError("unsupported checkpoint version in " + path);
  FieldParams p(MlpConfig::from_json(j.at("mlp")));
  auto theta = j.at("theta").get<std::vector<double>>();
  if (static_cast<int>(theta.size()) != p.parameter_count())
    throw DataError("checkpoint parameter count mismatch in " + path);
  p.flat() = Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());
  return p;
}

}  // namespace fieldprune
