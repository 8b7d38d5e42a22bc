#include "mongegap/neural_map.hpp"

#include <cmath>
#include <stdexcept>

#include "mongegap/errors.hpp"

namespace mongegap {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }
double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double act_value(Activation a, double x) { return a == Activation::GeLU ? gelu(x) : x; }
double act_prime(Activation a, double x) { return a == Activation::GeLU ? gelu_prime(x) : 1.0; }
double act_second(Activation a, double x) { return a == Activation::GeLU ? gelu_second(x) : 0.0; }

void validate_net(const MlpParams& net) {
  if (net.layer_dims.size() < 2)
    throw std::invalid_argument("mlp: layer_dims must list input and output");
  for (int d : net.layer_dims)
    if (d < 1) throw std::invalid_argument("mlp: layer dimensions must be positive");
  const std::size_t layers = net.layer_dims.size() - 1;
  if (net.weights.size() != layers || net.biases.size() != layers)
    throw std::invalid_argument("mlp: weights/biases do not match layer_dims");
  for (std::size_t l = 0; l < layers; ++l) {
    if (net.weights[l].rows() != net.layer_dims[l + 1] ||
        net.weights[l].cols() != net.layer_dims[l])
      throw std::invalid_argument("mlp: weight shape mismatch");
    if (net.biases[l].size() != net.layer_dims[l + 1])
      throw std::invalid_argument("mlp: bias shape mismatch");
  }
  if (net.residual) {
    if (net.residual->A.rows() != net.output_dim() || net.residual->A.cols() != net.input_dim() ||
        net.residual->b.size() != net.output_dim())
      throw std::invalid_argument("mlp: residual shape mismatch");
  }
}

void check_inputs(const MlpParams& net, const Matrix& X) {
  if (X.cols() != net.input_dim())
    throw std::invalid_argument("mlp: input width does not match input_dim");
  if (X.rows() == 0) throw std::invalid_argument("mlp: empty input batch");
}

}  // namespace

Activation parse_activation(const std::string& text) {
  if (text == "gelu") return Activation::GeLU;
  if (text == "identity") return Activation::Identity;
  throw std::invalid_argument("activation parse: unknown activation '" + text + "'");
}

std::string to_string(Activation activation) {
  return activation == Activation::GeLU ? "gelu" : "identity";
}

double gelu(double x) { return x * std_normal_cdf(x); }

double gelu_prime(double x) { return std_normal_cdf(x) + x * std_normal_pdf(x); }

double gelu_second(double x) { return std_normal_pdf(x) * (2.0 - x * x); }

Index MlpParams::parameter_count() const {
  Index count = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    count += weights[l].size() + biases[l].size();
  if (residual) count += residual->A.size() + residual->b.size();
  return count;
}

Vector MlpParams::flatten() const {
  validate_net(*this);
  Vector theta(parameter_count());
  Index off = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    theta.segment(off, weights[l].size()) =
        Eigen::Map<const Vector>(weights[l].data(), weights[l].size());
    off += weights[l].size();
    theta.segment(off, biases[l].size()) = biases[l];
    off += biases[l].size();
  }
  if (residual) {
    theta.segment(off, residual->A.size()) =
        Eigen::Map<const Vector>(residual->A.data(), residual->A.size());
    off += residual->A.size();
    theta.segment(off, residual->b.size()) = residual->b;
  }
  return theta;
}

void MlpParams::unflatten(const Vector& theta) {
  validate_net(*this);
  if (theta.size() != parameter_count())
    throw std::invalid_argument("mlp unflatten: parameter count mismatch");
  Index off = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    Eigen::Map<Vector>(weights[l].data(), weights[l].size()) =
        theta.segment(off, weights[l].size());
    off += weights[l].size();
    biases[l] = theta.segment(off, biases[l].size());
    off += biases[l].size();
  }
  if (residual) {
    Eigen::Map<Vector>(residual->A.data(), residual->A.size()) =
        theta.segment(off, residual->A.size());
    off += residual->A.size();
    residual->b = theta.segment(off, residual->b.size());
  }
}

MlpParams make_mlp(const std::vector<int>& layer_dims, Activation activation,
                   bool with_residual) {
  MlpParams net;
  net.layer_dims = layer_dims;
  net.activation = activation;
  if (layer_dims.size() < 2)
    throw std::invalid_argument("make_mlp: layer_dims must list input and output");
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    net.weights.push_back(Matrix::Zero(layer_dims[l + 1], layer_dims[l]));
    net.biases.push_back(Vector::Zero(layer_dims[l + 1]));
  }
  if (with_residual)
    net.residual = ResidualLayer{Matrix::Zero(layer_dims.back(), layer_dims.front()),
                                 Vector::Zero(layer_dims.back())};
  validate_net(net);
  return net;
}

Parameterization parse_parameterization(const std::string& text) {
  if (text == "direct") return Parameterization::Direct;
  if (text == "structured-conjugate") return Parameterization::StructuredConjugate;
  if (text == "sphere-normalized") return Parameterization::SphereNormalized;
  throw std::invalid_argument("parameterization parse: unknown tag '" + text + "'");
}

std::string to_string(Parameterization parameterization) {
  switch (parameterization) {
    case Parameterization::Direct: return "direct";
    case Parameterization::StructuredConjugate: return "structured-conjugate";
    case Parameterization::SphereNormalized: return "sphere-normalized";
  }
  throw std::logic_error("parameterization: unreachable tag");
}

Matrix forward(const MlpParams& net, const Matrix& X) {
  validate_net(net);
  check_inputs(net, X);
  const int layers = static_cast<int>(net.weights.size());
  Matrix A = X;
  for (int l = 0; l < layers; ++l) {
    Matrix Z = A * net.weights[l].transpose();
    Z.rowwise() += net.biases[l].transpose();
    if (l + 1 < layers)
      A = Z.unaryExpr([&](double v) { return act_value(net.activation, v); });
    else
      A = std::move(Z);
  }
  if (net.residual) {
    A.noalias() += X * net.residual->A.transpose();
    A.rowwise() += net.residual->b.transpose();
  }
  return A;
}

namespace {

void check_square_map(const MapModel& model) {
  if (model.net.input_dim() != model.net.output_dim())
    throw std::invalid_argument("map: parameterization requires input_dim == output_dim");
}

}  // namespace

Matrix apply_map(const MapModel& model, const Matrix& X) {
  const Matrix F = forward(model.net, X);
  switch (model.parameterization) {
    case Parameterization::Direct:
      return F;
    case Parameterization::StructuredConjugate: {
      check_square_map(model);
      Matrix T(F.rows(), F.cols());
      for (Index i = 0; i < F.rows(); ++i) {
        const Vector z = F.row(i).transpose();
        T.row(i) = X.row(i) - conjugate_gradient(model.cost, z).transpose();
      }
      return T;
    }
    case Parameterization::SphereNormalized: {
      check_square_map(model);
      Matrix T(F.rows(), F.cols());
      for (Index i = 0; i < F.rows(); ++i) {
        const double norm = F.row(i).norm();
        if (norm == 0.0)
          throw SingularityError("sphere-normalized map: F(x) == 0 cannot be projected");
        T.row(i) = F.row(i) / norm;
      }
      return T;
    }
  }
  throw std::logic_error("map: unreachable parameterization");
}

namespace {

struct LayerGrads {
  std::vector<Matrix> wbar;
  std::vector<Vector> bbar;
  Matrix abar;      // residual A
  Vector res_bbar;  // residual b

  explicit LayerGrads(const MlpParams& net) {
    wbar.reserve(net.weights.size());
    bbar.reserve(net.biases.size());
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      wbar.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
      bbar.push_back(Vector::Zero(net.biases[l].size()));
    }
    if (net.residual) {
      abar = Matrix::Zero(net.residual->A.rows(), net.residual->A.cols());
      res_bbar = Vector::Zero(net.residual->b.size());
    }
  }

  Vector pack(const MlpParams& net) const {
    Vector flat(net.parameter_count());
    Index off = 0;
    for (std::size_t l = 0; l < wbar.size(); ++l) {
      flat.segment(off, wbar[l].size()) = Eigen::Map<const Vector>(wbar[l].data(), wbar[l].size());
      off += wbar[l].size();
      flat.segment(off, bbar[l].size()) = bbar[l];
      off += bbar[l].size();
    }
    if (net.residual) {
      flat.segment(off, abar.size()) = Eigen::Map<const Vector>(abar.data(), abar.size());
      off += abar.size();
      flat.segment(off, res_bbar.size()) = res_bbar;
    }
    return flat;
  }
};

}  // namespace

Vector param_gradient(const MapModel& model, const Matrix& X, const Matrix& cotangents) {
  const MlpParams& net = model.net;
  validate_net(net);
  check_inputs(net, X);
  if (cotangents.rows() != X.rows() || cotangents.cols() != net.output_dim())
    throw std::invalid_argument("param_gradient: cotangent shape mismatch");

  const int layers = static_cast<int>(net.weights.size());
  std::vector<Matrix> acts(layers);  // acts[l] = input of layer l
  std::vector<Matrix> pre(layers);   // pre[l]  = affine output of layer l
  Matrix A = X;
  for (int l = 0; l < layers; ++l) {
    acts[l] = A;
    Matrix Z = A * net.weights[l].transpose();
    Z.rowwise() += net.biases[l].transpose();
    pre[l] = Z;
    if (l + 1 < layers)
      A = Z.unaryExpr([&](double v) { return act_value(net.activation, v); });
    else
      A = std::move(Z);
  }
  Matrix F = A;
  if (net.residual) {
    F.noalias() += X * net.residual->A.transpose();
    F.rowwise() += net.residual->b.transpose();
  }

  // Cotangents on F after chaining through the parameterization.
  Matrix U = cotangents;
  switch (model.parameterization) {
    case Parameterization::Direct:
      break;
    case Parameterization::StructuredConjugate: {
      check_square_map(model);
      for (Index i = 0; i < X.rows(); ++i) {
        const Vector z = F.row(i).transpose();
        const Vector jac = conjugate_gradient_jacobian(model.cost, z);
        const Vector u0 = U.row(i).transpose();
        U.row(i) = (-(jac.array() * u0.array())).matrix().transpose();
      }
      break;
    }
    case Parameterization::SphereNormalized: {
      check_square_map(model);
      for (Index i = 0; i < X.rows(); ++i) {
        const Vector f = F.row(i).transpose();
        const double norm = f.norm();
        if (norm == 0.0)
          throw SingularityError("sphere-normalized map: F(x) == 0 cannot be projected");
        const Vector t = f / norm;
        const Vector u0 = U.row(i).transpose();
        U.row(i) = ((u0 - u0.dot(t) * t) / norm).transpose();
      }
      break;
    }
  }

  LayerGrads grads(net);
  Matrix G = U;  // gradient with respect to pre[l]
  for (int l = layers - 1; l >= 0; --l) {
    grads.wbar[l].noalias() += G.transpose() * acts[l];
    grads.bbar[l] += G.colwise().sum().transpose();
    if (l > 0) {
      const Matrix GA = G * net.weights[l];
      G = (GA.array() *
           pre[l - 1].unaryExpr([&](double v) { return act_prime(net.activation, v); }).array())
              .matrix();
    }
  }
  if (net.residual) {
    grads.abar.noalias() += U.transpose() * X;
    grads.res_bbar += U.colwise().sum().transpose();
  }
  return grads.pack(net);
}

Vector jvp(const MlpParams& net, const Vector& x, const Vector& v) {
  validate_net(net);
  if (x.size() != net.input_dim() || v.size() != net.input_dim())
    throw std::invalid_argument("jvp: dimension mismatch");
  const int layers = static_cast<int>(net.weights.size());
  Vector a = x, t = v;
  for (int l = 0; l < layers; ++l) {
    const Vector z = net.weights[l] * a + net.biases[l];
    const Vector s = net.weights[l] * t;
    if (l + 1 < layers) {
      a = z.unaryExpr([&](double w) { return act_value(net.activation, w); });
      t = (z.unaryExpr([&](double w) { return act_prime(net.activation, w); }).array() * s.array())
              .matrix();
    } else {
      a = z;
      t = s;
    }
  }
  if (net.residual) t.noalias() += net.residual->A * v;
  return t;
}

Vector vjp(const MlpParams& net, const Vector& x, const Vector& u) {
  validate_net(net);
  if (x.size() != net.input_dim() || u.size() != net.output_dim())
    throw std::invalid_argument("vjp: dimension mismatch");
  const int layers = static_cast<int>(net.weights.size());
  std::vector<Vector> pre(layers);
  Vector a = x;
  for (int l = 0; l < layers; ++l) {
    pre[l] = net.weights[l] * a + net.biases[l];
    if (l + 1 < layers)
      a = pre[l].unaryExpr([&](double w) { return act_value(net.activation, w); });
  }
  Vector carry = u;  // cotangent on pre[l]
  for (int l = layers - 1; l >= 0; --l) {
    Vector down = net.weights[l].transpose() * carry;
    if (l > 0)
      carry = (pre[l - 1].unaryExpr([&](double w) { return act_prime(net.activation, w); }).array() *
               down.array())
                  .matrix();
    else
      carry = std::move(down);
  }
  if (net.residual) carry.noalias() += net.residual->A.transpose() * u;
  return carry;
}

Vector second_order_param_gradient(const MlpParams& net, const Matrix& X, const Matrix& V) {
  validate_net(net);
  check_inputs(net, X);
  if (net.input_dim() != net.output_dim())
    throw std::invalid_argument("second_order_param_gradient: requires input_dim == output_dim");
  if (V.cols() != net.input_dim() || V.rows() == 0)
    throw std::invalid_argument("second_order_param_gradient: probe shape mismatch");

  const int layers = static_cast<int>(net.weights.size());
  const int hidden = layers - 1;
  const Matrix Vt = V.transpose();  // columns are probes
  const bool has_res = net.residual.has_value();

  LayerGrads grads(net);

  std::vector<Vector> a(hidden + 1), z(hidden), p1(hidden), p2(hidden);
  std::vector<Matrix> T(hidden + 1), S(hidden);   // jvp chain
  std::vector<Matrix> UU(hidden), WW(hidden);     // vjp chain
  std::vector<Vector> zacc(hidden);

  for (Index i = 0; i < X.rows(); ++i) {
    // primal caches
    a[0] = X.row(i).transpose();
    for (int h = 0; h < hidden; ++h) {
      z[h] = net.weights[h] * a[h] + net.biases[h];
      p1[h] = z[h].unaryExpr([&](double w) { return act_prime(net.activation, w); });
      p2[h] = z[h].unaryExpr([&](double w) { return act_second(net.activation, w); });
      a[h + 1] = z[h].unaryExpr([&](double w) { return act_value(net.activation, w); });
    }

    // forward jvp chain for all probes at once
    T[0] = Vt;
    for (int h = 0; h < hidden; ++h) {
      S[h] = net.weights[h] * T[h];
      T[h + 1] = p1[h].asDiagonal() * S[h];
    }
    Matrix Jv = net.weights[hidden] * T[hidden];
    if (has_res) Jv.noalias() += net.residual->A * Vt;

    // forward vjp chain
    Matrix Uin;
    if (hidden > 0) {
      UU[hidden - 1] = net.weights[hidden].transpose() * Vt;
      for (int h = hidden - 1; h > 0; --h) {
        WW[h] = p1[h].asDiagonal() * UU[h];
        UU[h - 1] = net.weights[h].transpose() * WW[h];
      }
      WW[0] = p1[0].asDiagonal() * UU[0];
      Uin = net.weights[0].transpose() * WW[0];
    } else {
      Uin = net.weights[0].transpose() * Vt;
    }
    if (has_res) Uin.noalias() += net.residual->A.transpose() * Vt;

    const Matrix Rb = 2.0 * (Jv - Uin);

    for (int h = 0; h < hidden; ++h) zacc[h].setZero(z[h].size());

    // adjoint of the jvp side
    if (hidden > 0) {
      grads.wbar[hidden].noalias() += Rb * T[hidden].transpose();
      Matrix Tb = net.weights[hidden].transpose() * Rb;
      for (int h = hidden - 1; h >= 0; --h) {
        const Matrix Sb = p1[h].asDiagonal() * Tb;
        zacc[h] += (p2[h].array() * (S[h].array() * Tb.array()).rowwise().sum()).matrix();
        grads.wbar[h].noalias() += Sb * T[h].transpose();
        if (h > 0) Tb = net.weights[h].transpose() * Sb;
      }
    } else {
      grads.wbar[0].noalias() += Rb * Vt.transpose();
    }

    // adjoint of the vjp side (enters r with a minus sign)
    Matrix Ub = -Rb;
    if (hidden > 0) {
      for (int h = 0; h < hidden; ++h) {
        grads.wbar[h].noalias() += WW[h] * Ub.transpose();
        const Matrix Wb = net.weights[h] * Ub;
        zacc[h] += (p2[h].array() * (UU[h].array() * Wb.array()).rowwise().sum()).matrix();
        Ub = p1[h].asDiagonal() * Wb;
      }
      grads.wbar[hidden].noalias() += Vt * Ub.transpose();
    } else {
      grads.wbar[0].noalias() += Vt * Ub.transpose();
    }

    if (has_res) {
      const Matrix M = Rb * V;
      grads.abar += M - M.transpose();
    }

    // route the accumulated pre-activation adjoints into the primal weights
    Vector ab = Vector::Zero(net.layer_dims[hidden]);
    for (int h = hidden - 1; h >= 0; --h) {
      const Vector zt = zacc[h] + (p1[h].array() * ab.array()).matrix();
      grads.wbar[h].noalias() += zt * a[h].transpose();
      grads.bbar[h] += zt;
      if (h > 0) ab = net.weights[h].transpose() * zt;
    }
  }

  return grads.pack(net);
}

}  // namespace mongegap
