#include "proxsplit/problems.hpp"

#include <fftw3.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace proxsplit {

LinearMap finite_difference_K(int width, int height) {
  if (width < 2 || height < 2)
    throw std::invalid_argument("finite_difference_K: grid must be >= 2x2");
  std::size_t n = static_cast<std::size_t>(width) * height;
  std::string in_sp = image_space(width, height);
  std::string out_sp = tv_space(width, height);
  LinearMap m;
  m.in_space = in_sp;
  m.out_space = out_sp;
  m.in_dim = n;
  m.out_dim = 2 * n;
  m.apply = [width, height, n, out_sp](const Vec& x) {
    Vec y(2 * n, out_sp);
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j) {
        std::size_t p = static_cast<std::size_t>(i) * width + j;
        if (i + 1 < height) y[2 * p] = x[p + width] - x[p];
        if (j + 1 < width) y[2 * p + 1] = x[p + 1] - x[p];
      }
    return y;
  };
  m.adjoint = [width, height, n, in_sp](const Vec& u) {
    Vec x(n, in_sp);
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j) {
        std::size_t p = static_cast<std::size_t>(i) * width + j;
        if (i + 1 < height) {
          x[p + width] += u[2 * p];
          x[p] -= u[2 * p];
        }
        if (j + 1 < width) {
          x[p + 1] += u[2 * p + 1];
          x[p] -= u[2 * p + 1];
        }
      }
    return x;
  };
  m.norm_sq_bound = 8.0;
  return m;
}

// ---- spectral blur --------------------------------------------------------

struct SpectralBlur::Impl {
  int n;
  std::vector<double> spectrum;  // n x (n/2+1), half-complex grid
  fftw_plan fwd;
  fftw_plan bwd;
  double* rbuf;
  fftw_complex* cbuf;
};

SpectralBlur::SpectralBlur(int n, double spectrum_floor, double sharpness) {
  if (n < 8 || (n & (n - 1)) != 0)
    throw std::invalid_argument("SpectralBlur: n must be a power of two >= 8");
  impl_ = new Impl;
  impl_->n = n;
  int nc = n / 2 + 1;
  impl_->spectrum.resize(static_cast<std::size_t>(n) * nc);
  for (int i = 0; i < n; ++i) {
    double fi = static_cast<double>(std::min(i, n - i)) / n;
    for (int j = 0; j < nc; ++j) {
      double fj = static_cast<double>(j) / n;
      double s = std::exp(-sharpness * (fi * fi + fj * fj));
      impl_->spectrum[static_cast<std::size_t>(i) * nc + j] =
          std::clamp(s, spectrum_floor, 1.0);
    }
  }
  impl_->rbuf = fftw_alloc_real(static_cast<std::size_t>(n) * n);
  impl_->cbuf = fftw_alloc_complex(static_cast<std::size_t>(n) * nc);
  impl_->fwd = fftw_plan_dft_r2c_2d(n, n, impl_->rbuf, impl_->cbuf,
                                    FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft_c2r_2d(n, n, impl_->cbuf, impl_->rbuf,
                                    FFTW_ESTIMATE);
}

SpectralBlur::~SpectralBlur() {
  fftw_destroy_plan(impl_->fwd);
  fftw_destroy_plan(impl_->bwd);
  fftw_free(impl_->rbuf);
  fftw_free(impl_->cbuf);
  delete impl_;
}

int SpectralBlur::size() const { return impl_->n; }

Vec SpectralBlur::apply(const Vec& x) const {
  int n = impl_->n;
  int nc = n / 2 + 1;
  std::size_t nn = static_cast<std::size_t>(n) * n;
  if (x.size() != nn) throw std::invalid_argument("SpectralBlur: wrong size");
  // per-call buffers keep apply() safe to share across threads
  double* r = fftw_alloc_real(nn);
  fftw_complex* c = fftw_alloc_complex(static_cast<std::size_t>(n) * nc);
  for (std::size_t i = 0; i < nn; ++i) r[i] = x[i];
  fftw_execute_dft_r2c(impl_->fwd, r, c);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n) * nc; ++i) {
    c[i][0] *= impl_->spectrum[i];
    c[i][1] *= impl_->spectrum[i];
  }
  fftw_execute_dft_c2r(impl_->bwd, c, r);
  Vec y(nn, x.space);
  double scale = 1.0 / static_cast<double>(nn);
  for (std::size_t i = 0; i < nn; ++i) y[i] = r[i] * scale;
  fftw_free(r);
  fftw_free(c);
  return y;
}

SmoothTerm gaussian_blur_F(std::shared_ptr<const SpectralBlur> blur,
                           const Vec& y, double mu) {
  SmoothTerm f;
  Vec yc = y;
  f.value = [blur, yc](const Vec& x) {
    Vec r = blur->apply(x);
    r -= yc;
    return 0.5 * norm_sq(r);
  };
  f.gradient = [blur, yc](const Vec& x) {
    Vec r = blur->apply(x);
    r -= yc;
    return blur->apply(r);  // A* = A
  };
  f.lipschitz_L = 1.0;
  f.strong_mu = mu;
  return f;
}

// ---- proximable terms -----------------------------------------------------

ProxTerm l1_term(double lambda) {
  ProxTerm t;
  t.value = [lambda](const Vec& x) {
    double s = 0.0;
    for (double v : x.data) s += std::abs(v);
    return lambda * s;
  };
  t.prox = [lambda](double gamma, const Vec& z) {
    Vec out(z.size(), z.space);
    double thr = gamma * lambda;
    for (std::size_t i = 0; i < z.size(); ++i) {
      double v = z[i];
      out[i] = (v > thr) ? v - thr : (v < -thr ? v + thr : 0.0);
    }
    return out;
  };
  return t;
}

ProxTerm nonneg_term() {
  ProxTerm t;
  t.value = [](const Vec& x) {
    for (double v : x.data)
      if (v < 0.0) return kInf;
    return 0.0;
  };
  t.prox = [](double, const Vec& z) {
    Vec out = z;
    for (double& v : out.data) v = std::max(v, 0.0);
    return out;
  };
  return t;
}

ProxTerm l12_term(double lambda) {
  ProxTerm t;
  t.value = [lambda](const Vec& u) {
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < u.size(); p += 2)
      s += std::hypot(u[p], u[p + 1]);
    return lambda * s;
  };
  t.prox = [lambda](double gamma, const Vec& z) {
    Vec out(z.size(), z.space);
    double thr = gamma * lambda;
    for (std::size_t p = 0; p + 1 < z.size(); p += 2) {
      double nrm = std::hypot(z[p], z[p + 1]);
      double shrink = (nrm > thr) ? 1.0 - thr / nrm : 0.0;
      out[p] = shrink * z[p];
      out[p + 1] = shrink * z[p + 1];
    }
    return out;
  };
  return t;
}

double prox_huber_conjugate_scalar(double lambda, double nu, double gamma,
                                   double t) {
  return t / std::max(std::abs(t) / lambda, 1.0 + nu / (lambda * gamma));
}

Vec prox_huber_conjugate(double lambda, double nu, double gamma,
                         const Vec& u) {
  Vec out(u.size(), u.space);
  for (std::size_t p = 0; p + 1 < u.size(); p += 2) {
    double nrm = std::hypot(u[p], u[p + 1]);
    double denom = std::max(nrm / lambda, 1.0 + nu / (lambda * gamma));
    out[p] = u[p] / denom;
    out[p + 1] = u[p + 1] / denom;
  }
  return out;
}

ProxTerm huber_l12_term(double lambda, double nu) {
  ProxTerm t;
  t.value = [lambda, nu](const Vec& u) {
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < u.size(); p += 2) {
      double m = std::hypot(u[p], u[p + 1]);
      // branchless Huber: l/(2nu) max(nu-|t|,0)^2 + l(|t|-nu/2)
      double q = std::max(nu - m, 0.0);
      s += lambda / (2.0 * nu) * q * q + lambda * (m - nu / 2.0);
    }
    return s;
  };
  // prox from the closed-form conjugate prox via the Moreau identity
  t.prox = [lambda, nu](double gamma, const Vec& z) {
    Vec w = (1.0 / gamma) * Vec(z);
    Vec pc = prox_huber_conjugate(lambda, nu, gamma, w);
    Vec out = z;
    out.axpy(-gamma, pc);
    return out;
  };
  t.smooth_L = lambda / nu;
  return t;
}

Vec prox_l12_conjugate(double lambda, const Vec& u) {
  Vec out(u.size(), u.space);
  for (std::size_t p = 0; p + 1 < u.size(); p += 2) {
    double denom = std::max(std::hypot(u[p], u[p + 1]) / lambda, 1.0);
    out[p] = u[p] / denom;
    out[p + 1] = u[p + 1] / denom;
  }
  return out;
}

ProxTerm hinge_term(const Vec& a, double b) {
  double eta = norm_sq(a);
  if (eta <= 0.0)
    throw std::invalid_argument("hinge_term: zero sample vector");
  Vec ac = a;
  ProxTerm t;
  t.value = [ac, b](const Vec& x) {
    return std::max(1.0 - b * dot(ac, x), 0.0);
  };
  t.prox = [ac, b, eta](double gamma, const Vec& x) {
    double margin = b * dot(ac, x) - 1.0;
    double step = std::max(std::min(margin, 0.0), -eta * gamma);
    Vec out = x;
    out.axpy(-(b / eta) * step, ac);
    return out;
  };
  return t;
}

ProxTerm scaled_sq_norm_term(double alpha) {
  if (alpha <= 0.0) throw std::invalid_argument("scaled_sq_norm: alpha <= 0");
  ProxTerm t;
  t.value = [alpha](const Vec& x) { return 0.5 * alpha * norm_sq(x); };
  t.prox = [alpha](double gamma, const Vec& z) {
    return (1.0 / (1.0 + gamma * alpha)) * Vec(z);
  };
  t.strong_mu = alpha;
  t.smooth_L = alpha;
  return t;
}

ProxTerm linear_plus_quadratic_term(const Vec& c, const Vec& b, double rho) {
  Vec cc = c, bc = b;
  ProxTerm t;
  t.value = [cc, bc, rho](const Vec& x) {
    return dot(cc, x) + 0.5 * rho * dist_sq(x, bc);
  };
  t.prox = [cc, bc, rho](double gamma, const Vec& z) {
    Vec out = z;
    out.axpy(-gamma, cc);
    out.axpy(gamma * rho, bc);
    out *= 1.0 / (1.0 + gamma * rho);
    return out;
  };
  t.strong_mu = rho;
  t.smooth_L = rho;
  return t;
}

// ---- experiment problems --------------------------------------------------

ImageGrid synthetic_phantom(int n) {
  if (n < 8) throw std::invalid_argument("synthetic_phantom: n < 8");
  ImageGrid g;
  g.width = g.height = n;
  g.pixels = Vec(static_cast<std::size_t>(n) * n, image_space(n, n));
  auto inside = [](double x, double y, double cx, double cy, double rx,
                   double ry) {
    double dx = (x - cx) / rx, dy = (y - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double y = (i + 0.5) / n, x = (j + 0.5) / n;
      double v = 0.0;
      if (inside(x, y, 0.5, 0.5, 0.42, 0.34)) v = 0.8;
      if (inside(x, y, 0.42, 0.48, 0.16, 0.11)) v = 0.4;
      if (inside(x, y, 0.64, 0.6, 0.09, 0.14)) v = 1.0;
      g.pixels[static_cast<std::size_t>(i) * n + j] = v;
    }
  return g;
}

DeblurProblem make_deblur(int n, bool huber, double lambda, double nu,
                          double noise_sigma, unsigned seed) {
  DeblurProblem p;
  ImageGrid phantom = synthetic_phantom(n);
  p.x_true = phantom.pixels;
  p.blur = std::make_shared<SpectralBlur>(n, 0.1);
  Vec y = p.blur->apply(p.x_true);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : y.data) v += noise_sigma * gauss(rng);
  p.y = y;

  TermBundle b;
  b.dim = p.x_true.size();
  b.x_space = p.x_true.space;
  b.F = gaussian_blur_F(p.blur, y, 0.01);
  b.R = nonneg_term();
  b.H = huber ? huber_l12_term(lambda, nu) : l12_term(lambda);
  b.K = finite_difference_K(n, n);
  b.eta = 8.0;
  p.bundle = std::move(b);
  return p;
}

SvmDataset load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_libsvm: cannot open " + path);
  std::vector<std::pair<double, std::vector<std::pair<std::size_t, double>>>>
      rows;
  std::string line;
  std::size_t lineno = 0, max_idx = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double label;
    if (!(ss >> label))
      throw std::runtime_error("load_libsvm: bad label at line " +
                               std::to_string(lineno));
    if (label == 0.0) label = -1.0;  // {0,1} encoding
    if (label != 1.0 && label != -1.0)
      throw std::runtime_error("load_libsvm: label not in {-1,+1} at line " +
                               std::to_string(lineno));
    std::vector<std::pair<std::size_t, double>> feats;
    std::string tok;
    while (ss >> tok) {
      auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("load_libsvm: malformed feature at line " +
                                 std::to_string(lineno));
      std::size_t idx = 0;
      double val = 0.0;
      try {
        idx = std::stoul(tok.substr(0, colon));
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        throw std::runtime_error("load_libsvm: malformed feature at line " +
                                 std::to_string(lineno));
      }
      if (idx == 0)
        throw std::runtime_error("load_libsvm: indices are 1-based, line " +
                                 std::to_string(lineno));
      max_idx = std::max(max_idx, idx);
      feats.emplace_back(idx - 1, val);
    }
    rows.emplace_back(label, std::move(feats));
  }
  if (rows.empty()) throw std::runtime_error("load_libsvm: empty file " + path);
  SvmDataset ds;
  ds.d = max_idx;
  std::string sp = "svm" + std::to_string(ds.d);
  for (const auto& [label, feats] : rows) {
    Vec a(ds.d, sp);
    for (const auto& [i, v] : feats) a[i] = v;
    ds.samples.push_back(std::move(a));
    ds.labels.push_back(label);
  }
  return ds;
}

SvmDataset toy_svm_dataset(std::size_t m, std::size_t d, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::string sp = "svm" + std::to_string(d);
  Vec w(d, sp);
  for (double& v : w.data) v = gauss(rng);
  SvmDataset ds;
  ds.d = d;
  for (std::size_t i = 0; i < m; ++i) {
    Vec a(d, sp);
    for (double& v : a.data) v = gauss(rng);
    double s = dot(w, a) / std::sqrt(static_cast<double>(d));
    double label = (s >= 0.0) ? 1.0 : -1.0;
    if (unif(rng) < 0.15) label = -label;  // keep it nonseparable
    ds.samples.push_back(std::move(a));
    ds.labels.push_back(label);
  }
  return ds;
}

LiftedProblem make_svm_problem(const SvmDataset& ds, double alpha) {
  LiftedProblem lp;
  std::size_t M = ds.samples.size();
  lp.dim = ds.d;
  lp.x_space = ds.samples.front().space;
  for (std::size_t m = 0; m < M; ++m) {
    NodeSpec n;
    n.index = static_cast<int>(m);
    n.H = hinge_term(ds.samples[m], ds.labels[m]);
    n.omega = 1.0 / static_cast<double>(M);
    lp.nodes.push_back(std::move(n));
  }
  lp.R = scaled_sq_norm_term(alpha);
  lp.mu_R = alpha;
  lp.L_hat = 0.0;
  lp.K_hat_norm_sq = 1.0;  // K_m = I on the consensus subspace
  lp.eta = 1.0;
  return lp;
}

}  // namespace proxsplit
