#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "ccsd/common.hpp"

namespace ccsd::ad {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<RowMat>;
using CMapM = Eigen::Map<const RowMat>;

/// One node of the dynamic computation graph. Values and gradients are dense
/// row-major buffers of shape rows x cols.
struct Node {
  Eigen::Index rows = 0, cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first use
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backfn;

  Eigen::Index size() const { return rows * cols; }
  MapM v() { return MapM(value.data(), rows, cols); }
  CMapM v() const { return CMapM(value.data(), rows, cols); }
  MapM g() {
    if (grad.empty()) grad.assign(static_cast<std::size_t>(size()), 0.0);
    return MapM(grad.data(), rows, cols);
  }
};

/// Value-semantics handle to a graph node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  /// Leaf holding a constant (no gradient).
  static Tensor constant(const Mat& m) { return leaf(m, false); }
  static Tensor constant(Eigen::Index rows, Eigen::Index cols, double fill = 0.0) {
    return leaf(Mat::Constant(rows, cols, fill), false);
  }
  /// Leaf that participates in backward (a parameter).
  static Tensor variable(const Mat& m) { return leaf(m, true); }

  bool defined() const { return node_ != nullptr; }
  Eigen::Index rows() const { return node_->rows; }
  Eigen::Index cols() const { return node_->cols; }
  bool requires_grad() const { return node_->requires_grad; }

  Mat value() const { return node_->v(); }
  double scalar() const {
    require(node_->size() == 1, "Tensor::scalar: not a 1x1 tensor");
    return node_->value[0];
  }
  Mat grad() const {
    require(node_->requires_grad, "Tensor::grad: tensor has no gradient");
    if (node_->grad.empty()) return Mat::Zero(node_->rows, node_->cols);
    return CMapM(node_->grad.data(), node_->rows, node_->cols);
  }
  void set_value(const Mat& m) {
    require(m.rows() == node_->rows && m.cols() == node_->cols, "set_value: shape mismatch");
    MapM(node_->value.data(), node_->rows, node_->cols) = m;
  }
  void zero_grad() { node_->grad.assign(node_->grad.size(), 0.0); }
  void add_to_value(const Mat& m) { node_->v() += m; }

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  static Tensor leaf(const Mat& m, bool req) {
    auto n = std::make_shared<Node>();
    n->rows = m.rows();
    n->cols = m.cols();
    n->value.resize(static_cast<std::size_t>(m.size()));
    MapM(n->value.data(), n->rows, n->cols) = m;
    n->requires_grad = req;
    return Tensor(std::move(n));
  }
  std::shared_ptr<Node> node_;
};

namespace detail {

inline Tensor make_op(Eigen::Index rows, Eigen::Index cols,
                      std::vector<std::shared_ptr<Node>> parents,
                      std::function<void(Node&)> backfn) {
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(static_cast<std::size_t>(rows * cols), 0.0);
  for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
  if (n->requires_grad) {
    n->parents = std::move(parents);
    n->backfn = std::move(backfn);
  }
  return Tensor(std::move(n));
}

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(op) + ": shape mismatch");
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "add");
  auto pa = a.node(), pb = b.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa, pb}, [pa, pb](Node& n) {
    if (pa->requires_grad) pa->g() += n.g();
    if (pb->requires_grad) pb->g() += n.g();
  });
  out.node()->v() = pa->v() + pb->v();
  return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "sub");
  auto pa = a.node(), pb = b.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa, pb}, [pa, pb](Node& n) {
    if (pa->requires_grad) pa->g() += n.g();
    if (pb->requires_grad) pb->g() -= n.g();
  });
  out.node()->v() = pa->v() - pb->v();
  return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mul");
  auto pa = a.node(), pb = b.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa, pb}, [pa, pb](Node& n) {
    if (pa->requires_grad) pa->g().array() += n.g().array() * pb->v().array();
    if (pb->requires_grad) pb->g().array() += n.g().array() * pa->v().array();
  });
  out.node()->v().array() = pa->v().array() * pb->v().array();
  return out;
}

inline Tensor scalar_mul(const Tensor& a, double s) {
  auto pa = a.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa}, [pa, s](Node& n) {
    if (pa->requires_grad) pa->g() += s * n.g();
  });
  out.node()->v() = s * pa->v();
  return out;
}

inline Tensor scalar_add(const Tensor& a, double s) {
  auto pa = a.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa}, [pa](Node& n) {
    if (pa->requires_grad) pa->g() += n.g();
  });
  out.node()->v() = pa->v().array() + s;
  return out;
}

inline Tensor neg(const Tensor& a) { return scalar_mul(a, -1.0); }

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  auto pa = a.node(), pb = b.node();
  Tensor out = detail::make_op(a.rows(), b.cols(), {pa, pb}, [pa, pb](Node& n) {
    if (pa->requires_grad) pa->g().noalias() += n.g() * pb->v().transpose();
    if (pb->requires_grad) pb->g().noalias() += pa->v().transpose() * n.g();
  });
  out.node()->v().noalias() = pa->v() * pb->v();
  return out;
}

inline Tensor transpose(const Tensor& a) {
  auto pa = a.node();
  Tensor out = detail::make_op(a.cols(), a.rows(), {pa}, [pa](Node& n) {
    if (pa->requires_grad) pa->g() += n.g().transpose();
  });
  out.node()->v() = pa->v().transpose();
  return out;
}

inline Tensor tanh(const Tensor& a) {
  auto pa = a.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa}, [pa](Node& n) {
    if (pa->requires_grad)
      pa->g().array() += n.g().array() * (1.0 - n.v().array().square());
  });
  out.node()->v().array() = pa->v().array().tanh();
  return out;
}

inline Tensor relu(const Tensor& a) {
  auto pa = a.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa}, [pa](Node& n) {
    if (pa->requires_grad)
      pa->g().array() += n.g().array() * (pa->v().array() > 0.0).cast<double>();
  });
  out.node()->v().array() = pa->v().array().max(0.0);
  return out;
}

/// Broadcast a row vector [1 x n] over the rows of a [m x n].
inline Tensor add_rowvec(const Tensor& a, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_rowvec: need a 1 x cols row");
  auto pa = a.node(), pr = row.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa, pr}, [pa, pr](Node& n) {
    if (pa->requires_grad) pa->g() += n.g();
    if (pr->requires_grad) pr->g() += n.g().colwise().sum();
  });
  out.node()->v() = pa->v().rowwise() + Eigen::RowVectorXd(pr->v().row(0));
  return out;
}

/// diag(vec) * M with vec [m x 1].
inline Tensor scale_rows(const Tensor& m, const Tensor& vec) {
  require(vec.cols() == 1 && vec.rows() == m.rows(), "scale_rows: need an m x 1 vector");
  auto pm = m.node(), pv = vec.node();
  Tensor out = detail::make_op(m.rows(), m.cols(), {pm, pv}, [pm, pv](Node& n) {
    if (pm->requires_grad)
      pm->g().array() += n.g().array().colwise() * pv->v().col(0).array();
    if (pv->requires_grad)
      pv->g().col(0).array() += (n.g().array() * pm->v().array()).rowwise().sum();
  });
  out.node()->v().array() = pm->v().array().colwise() * pv->v().col(0).array();
  return out;
}

/// M * diag(vec) with vec [n x 1].
inline Tensor scale_cols(const Tensor& m, const Tensor& vec) {
  require(vec.cols() == 1 && vec.rows() == m.cols(), "scale_cols: need an n x 1 vector");
  auto pm = m.node(), pv = vec.node();
  Tensor out = detail::make_op(m.rows(), m.cols(), {pm, pv}, [pm, pv](Node& n) {
    if (pm->requires_grad)
      pm->g().array() += n.g().array().rowwise() * pv->v().col(0).transpose().array();
    if (pv->requires_grad)
      pv->g().col(0).array() += (n.g().array() * pm->v().array()).colwise().sum().transpose();
  });
  out.node()->v().array() = pm->v().array().rowwise() * pv->v().col(0).transpose().array();
  return out;
}

inline Tensor row_sum(const Tensor& a) {
  auto pa = a.node();
  Tensor out = detail::make_op(a.rows(), 1, {pa}, [pa](Node& n) {
    if (pa->requires_grad) pa->g().colwise() += n.g().col(0);
  });
  out.node()->v().col(0) = pa->v().rowwise().sum();
  return out;
}

inline Tensor clamp_min(const Tensor& a, double lo) {
  auto pa = a.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa, }, [pa, lo](Node& n) {
    if (pa->requires_grad)
      pa->g().array() += n.g().array() * (pa->v().array() > lo).cast<double>();
  });
  out.node()->v().array() = pa->v().array().max(lo);
  return out;
}

/// x^{-1/2} where x > 0, and 0 elsewhere (pseudo-inverse convention for
/// degree normalizations).
inline Tensor safe_rsqrt(const Tensor& a) {
  auto pa = a.node();
  Tensor out = detail::make_op(a.rows(), a.cols(), {pa}, [pa](Node& n) {
    if (pa->requires_grad) {
      auto x = pa->v().array();
      pa->g().array() +=
          n.g().array() * (x > 0.0).cast<double>() * (-0.5) * (n.v().array().pow(3));
    }
  });
  auto x = pa->v().array();
  out.node()->v().array() = (x > 0.0).select(x.rsqrt(), 0.0);
  return out;
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols: empty list");
  Eigen::Index rows = parts[0].rows(), cols = 0;
  std::vector<std::shared_ptr<Node>> parents;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
    parents.push_back(p.node());
  }
  auto ps = parents;
  Tensor out = detail::make_op(rows, cols, std::move(parents), [ps](Node& n) {
    Eigen::Index off = 0;
    for (const auto& p : ps) {
      if (p->requires_grad) p->g() += n.g().middleCols(off, p->cols);
      off += p->cols;
    }
  });
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.node()->v().middleCols(off, p.cols()) = p.node()->v();
    off += p.cols();
  }
  return out;
}

inline Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index len) {
  require(start >= 0 && len >= 1 && start + len <= a.cols(), "slice_cols: out of range");
  auto pa = a.node();
  Tensor out = detail::make_op(a.rows(), len, {pa}, [pa, start, len](Node& n) {
    if (pa->requires_grad) pa->g().middleCols(start, len) += n.g();
  });
  out.node()->v() = pa->v().middleCols(start, len);
  return out;
}

/// Row-major reshape (a view-like copy).
inline Tensor reshape(const Tensor& a, Eigen::Index rows, Eigen::Index cols) {
  require(rows * cols == a.rows() * a.cols(), "reshape: element count mismatch");
  auto pa = a.node();
  Tensor out = detail::make_op(rows, cols, {pa}, [pa](Node& n) {
    if (pa->requires_grad) {
      MapM pg = pa->g();
      Eigen::Map<Eigen::VectorXd> flat_pg(pg.data(), pg.size());
      MapM ng = n.g();
      flat_pg += Eigen::Map<Eigen::VectorXd>(ng.data(), ng.size());
    }
  });
  out.node()->value = pa->value;  // same row-major layout
  return out;
}

inline Tensor sum(const Tensor& a) {
  auto pa = a.node();
  Tensor out = detail::make_op(1, 1, {pa}, [pa](Node& n) {
    if (pa->requires_grad) pa->g().array() += n.g()(0, 0);
  });
  out.node()->value[0] = pa->v().sum();
  return out;
}

inline Tensor mean(const Tensor& a) {
  return scalar_mul(sum(a), 1.0 / static_cast<double>(a.rows() * a.cols()));
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scalar_mul(a, s); }

/// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
/// reachable tensor with requires_grad set.
inline void backward(const Tensor& loss) {
  require(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be scalar");
  require(loss.requires_grad(), "backward: loss does not depend on any variable");
  // topological order by depth-first post-order over requires_grad nodes
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->g()(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backfn) (*it)->backfn(**it);
}

}  // namespace ccsd::ad
