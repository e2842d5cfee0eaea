#include "sfl/models.hpp"

#include <cmath>
#include <stdexcept>

#include "sfl/kernels.hpp"

namespace sfl {
namespace {

// C += A^T * B  (A: n x p, B: n x q, C: p x q)
void matmul_tn_acc(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c) {
  for (std::size_t k = 0; k < a.rows; ++k) {
    for (std::size_t i = 0; i < a.cols; ++i) {
      kernels::active().axpy(a.at(k, i), b.row(k), c.row(i), b.cols);
    }
  }
}

// C = A * B^T  (A: n x p, B: q x p, C: n x q)
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < b.rows; ++j) {
      c.at(i, j) = kernels::active().dot(a.row(i), b.row(j), a.cols);
    }
  }
  return c;
}

struct Layout {
  // offsets into the flat parameter vector
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
  std::size_t hidden = 0;  // 0 for linear
};

Layout layout_of(const ModelSpec& s) {
  Layout l;
  l.hidden = s.hidden_dim;
  if (s.hidden_dim == 0) {
    l.w1 = 0;
    l.b1 = s.input_dim * s.output_dim;
  } else {
    l.w1 = 0;
    l.b1 = s.input_dim * s.hidden_dim;
    l.w2 = l.b1 + s.hidden_dim;
    l.b2 = l.w2 + s.hidden_dim * s.output_dim;
  }
  return l;
}

// out = X * W + bias, W read from flat params at offset (in x out, row-major)
DenseMatrix affine(const DenseMatrix& x, const double* w, const double* bias,
                   std::size_t out_dim) {
  DenseMatrix y(x.rows, out_dim);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double* yr = y.row(i);
    for (std::size_t j = 0; j < out_dim; ++j) yr[j] = bias[j];
    const double* xr = x.row(i);
    for (std::size_t k = 0; k < x.cols; ++k) {
      kernels::active().axpy(xr[k], w + k * out_dim, yr, out_dim);
    }
  }
  return y;
}

void check_batch(const Model& m, const Batch& b) {
  if (b.size() == 0) throw std::invalid_argument("model: empty batch");
  if (b.inputs.cols != m.spec.input_dim)
    throw std::invalid_argument("model: batch input_dim mismatch");
  if (m.spec.task == Task::classification) {
    if (b.labels.size() != b.size())
      throw std::invalid_argument("model: labels/batch size mismatch");
    for (int y : b.labels)
      if (y < 0 || static_cast<std::size_t>(y) >= m.spec.output_dim)
        throw std::invalid_argument("model: label out of range");
  } else {
    if (b.targets.rows != b.size() || b.targets.cols != m.spec.output_dim)
      throw std::invalid_argument("model: targets shape mismatch");
  }
  if (m.params.size() != param_count(m.spec))
    throw std::invalid_argument("model: param length mismatch");
}

struct ForwardCache {
  DenseMatrix hidden_act;  // tanh activations, empty for linear
  DenseMatrix outputs;     // logits or forecasts
};

ForwardCache run_forward(const Model& m, const Batch& b) {
  const Layout l = layout_of(m.spec);
  const double* p = m.params.data();
  ForwardCache c;
  if (l.hidden == 0) {
    c.outputs = affine(b.inputs, p + l.w1, p + l.b1, m.spec.output_dim);
  } else {
    c.hidden_act = affine(b.inputs, p + l.w1, p + l.b1, l.hidden);
    for (double& v : c.hidden_act.values) v = std::tanh(v);
    c.outputs = affine(c.hidden_act, p + l.w2, p + l.b2, m.spec.output_dim);
  }
  return c;
}

DenseMatrix softmax_rows(const DenseMatrix& logits) {
  DenseMatrix probs(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const double* z = logits.row(i);
    double zmax = z[0];
    for (std::size_t j = 1; j < logits.cols; ++j) zmax = std::max(zmax, z[j]);
    double sum = 0.0;
    double* pr = probs.row(i);
    for (std::size_t j = 0; j < logits.cols; ++j) {
      pr[j] = std::exp(z[j] - zmax);
      sum += pr[j];
    }
    for (std::size_t j = 0; j < logits.cols; ++j) pr[j] /= sum;
  }
  return probs;
}

}  // namespace

std::size_t param_count(const ModelSpec& s) {
  if (s.hidden_dim == 0) return s.input_dim * s.output_dim + s.output_dim;
  return s.input_dim * s.hidden_dim + s.hidden_dim +
         s.hidden_dim * s.output_dim + s.output_dim;
}

Model init_model(const ModelSpec& spec, RngStream& stream) {
  Model m{spec, ParamVector(param_count(spec), 0.0)};
  const Layout l = layout_of(spec);
  auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i)
      m.params[offset + i] = scale * stream.normal();
  };
  if (spec.hidden_dim == 0) {
    fill(l.w1, spec.input_dim * spec.output_dim, spec.input_dim);
  } else {
    fill(l.w1, spec.input_dim * spec.hidden_dim, spec.input_dim);
    fill(l.w2, spec.hidden_dim * spec.output_dim, spec.hidden_dim);
  }
  return m;
}

ForwardResult forward_loss(const Model& model, const Batch& batch) {
  check_batch(model, batch);
  ForwardCache c = run_forward(model, batch);
  ForwardResult r;
  const std::size_t n = batch.size();
  if (model.spec.task == Task::classification) {
    r.predictions = softmax_rows(c.outputs);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = r.predictions.at(i, static_cast<std::size_t>(batch.labels[i]));
      loss += -std::log(std::max(p, 1e-300));
    }
    r.loss = loss / static_cast<double>(n);
  } else {
    r.predictions = c.outputs;
    double sq = 0.0;
    for (std::size_t i = 0; i < r.predictions.values.size(); ++i) {
      const double d = r.predictions.values[i] - batch.targets.values[i];
      sq += d * d;
    }
    r.loss = sq / static_cast<double>(r.predictions.values.size());
  }
  return r;
}

ParamVector grad(const Model& model, const Batch& batch) {
  check_batch(model, batch);
  const ModelSpec& s = model.spec;
  const Layout l = layout_of(s);
  ForwardCache c = run_forward(model, batch);
  const std::size_t n = batch.size();

  // Gradient of the loss w.r.t. the network outputs.
  DenseMatrix dout(n, s.output_dim);
  if (s.task == Task::classification) {
    dout = softmax_rows(c.outputs);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      dout.at(i, static_cast<std::size_t>(batch.labels[i])) -= 1.0;
      kernels::active().scale(inv_n, dout.row(i), s.output_dim);
    }
  } else {
    const double scale = 2.0 / static_cast<double>(n * s.output_dim);
    for (std::size_t i = 0; i < dout.values.size(); ++i)
      dout.values[i] = scale * (c.outputs.values[i] - batch.targets.values[i]);
  }

  ParamVector g(param_count(s), 0.0);
  auto bias_grad = [&](const DenseMatrix& d, std::size_t offset) {
    for (std::size_t i = 0; i < d.rows; ++i)
      kernels::active().axpy(1.0, d.row(i), g.data() + offset, d.cols);
  };

  if (l.hidden == 0) {
    DenseMatrix dw(s.input_dim, s.output_dim);
    matmul_tn_acc(batch.inputs, dout, dw);
    std::copy(dw.values.begin(), dw.values.end(), g.begin() + l.w1);
    bias_grad(dout, l.b1);
  } else {
    const double* p = model.params.data();
    DenseMatrix dw2(l.hidden, s.output_dim);
    matmul_tn_acc(c.hidden_act, dout, dw2);
    std::copy(dw2.values.begin(), dw2.values.end(), g.begin() + l.w2);
    bias_grad(dout, l.b2);

    // back through tanh: dz = (dout * W2^T) .* (1 - a^2)
    DenseMatrix w2(l.hidden, s.output_dim);
    std::copy(p + l.w2, p + l.w2 + l.hidden * s.output_dim, w2.values.begin());
    DenseMatrix dz = matmul_nt(dout, w2);  // n x hidden
    for (std::size_t i = 0; i < dz.values.size(); ++i) {
      const double a = c.hidden_act.values[i];
      dz.values[i] *= (1.0 - a * a);
    }
    DenseMatrix dw1(s.input_dim, l.hidden);
    matmul_tn_acc(batch.inputs, dz, dw1);
    std::copy(dw1.values.begin(), dw1.values.end(), g.begin() + l.w1);
    bias_grad(dz, l.b1);
  }
  return g;
}

Model local_sgd_step(const Model& model, const Batch& batch, double eta,
                     double lambda, const ParamVector& w_global,
                     const ParamVector& u_personal) {
  if (w_global.size() != model.params.size() ||
      u_personal.size() != model.params.size())
    throw std::invalid_argument("local_sgd_step: anchor length mismatch");
  ParamVector g = grad(model, batch);
  Model out = model;
  const std::size_t p = g.size();
  for (std::size_t i = 0; i < p; ++i) {
    const double prox = lambda * (model.params[i] - w_global[i]) +
                        lambda * (model.params[i] - u_personal[i]);
    out.params[i] = model.params[i] - eta * (g[i] + prox);
  }
  return out;
}

TaskMetrics evaluate(const Model& model, const Batch& batch,
                     const Normalization* denorm) {
  ForwardResult r = forward_loss(model, batch);
  TaskMetrics m;
  if (model.spec.task == Task::classification) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const double* pr = r.predictions.row(i);
      std::size_t best = 0;
      for (std::size_t j = 1; j < model.spec.output_dim; ++j)
        if (pr[j] > pr[best]) best = j;  // ties keep the lowest index
      if (static_cast<int>(best) == batch.labels[i]) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(batch.size());
  } else {
    std::vector<double> pred(r.predictions.values);
    std::vector<double> target(batch.targets.values);
    if (denorm != nullptr) {
      for (double& v : pred) v = denorm->denorm(v);
      for (double& v : target) v = denorm->denorm(v);
    }
    m = regression_metrics(pred, target);
  }
  return m;
}

}  // namespace sfl
