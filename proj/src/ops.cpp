#include "varitab/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varitab {

namespace {

void expect(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

using ImplPtr = std::shared_ptr<TensorImpl>;

Tensor make_node(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                 std::function<void(TensorImpl&)> backward_fn) {
    Tensor out = Tensor::from(std::move(shape), std::move(values));
    if (!grad_enabled()) return out;
    bool any = false;
    for (const auto& p : parents) any = any || p.impl()->requires_grad;
    if (!any) return out;
    out.impl()->requires_grad = true;
    out.impl()->parents.reserve(parents.size());
    for (const auto& p : parents) out.impl()->parents.push_back(p.impl());
    out.impl()->backward_fn = std::move(backward_fn);
    return out;
}

bool same_shape(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape();
}

int64_t last_extent(const Tensor& a) {
    expect(a.rank() >= 1, "op requires rank >= 1");
    return a.shape().back();
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    expect(same_shape(a, b), "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<double> out(a.values());
    for (size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i];
    ImplPtr pa = a.impl(), pb = b.impl();
    return make_node(a.shape(), std::move(out), {a, b}, [pa, pb](TensorImpl& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    expect(same_shape(a, b), "sub: shape mismatch");
    std::vector<double> out(a.values());
    for (size_t i = 0; i < out.size(); ++i) out[i] -= b.values()[i];
    ImplPtr pa = a.impl(), pb = b.impl();
    return make_node(a.shape(), std::move(out), {a, b}, [pa, pb](TensorImpl& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    expect(same_shape(a, b), "mul: shape mismatch");
    std::vector<double> out(a.values());
    for (size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
    ImplPtr pa = a.impl(), pb = b.impl();
    return make_node(a.shape(), std::move(out), {a, b}, [pa, pb](TensorImpl& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->values[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->values[i];
        }
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.values());
    for (double& v : out) v *= c;
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa, c](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += c * self.grad[i];
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.values());
    for (double& v : out) v += c;
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
    const int64_t d = last_extent(a);
    expect(bias.rank() == 1 && bias.extent(0) == d,
           "add_bias: bias must be [" + std::to_string(d) + "]");
    const int64_t rows = a.numel() / d;
    std::vector<double> out(a.values());
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < d; ++j) out[r * d + j] += bias.values()[j];
    ImplPtr pa = a.impl(), pb = bias.impl();
    return make_node(a.shape(), std::move(out), {a, bias}, [pa, pb, rows, d](TensorImpl& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < d; ++j) pb->grad[j] += self.grad[r * d + j];
        }
    });
}

Tensor mul_last(const Tensor& a, const Tensor& s) {
    const int64_t d = last_extent(a);
    Shape want = a.shape();
    want.back() = 1;
    expect(s.shape() == want, "mul_last: scale must be " + shape_str(want));
    const int64_t rows = a.numel() / d;
    std::vector<double> out(a.values());
    for (int64_t r = 0; r < rows; ++r) {
        const double f = s.values()[r];
        for (int64_t j = 0; j < d; ++j) out[r * d + j] *= f;
    }
    ImplPtr pa = a.impl(), ps = s.impl();
    return make_node(a.shape(), std::move(out), {a, s}, [pa, ps, rows, d](TensorImpl& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (int64_t r = 0; r < rows; ++r) {
                const double f = ps->values[r];
                for (int64_t j = 0; j < d; ++j) pa->grad[r * d + j] += self.grad[r * d + j] * f;
            }
        }
        if (ps->requires_grad) {
            ps->ensure_grad();
            for (int64_t r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (int64_t j = 0; j < d; ++j) acc += self.grad[r * d + j] * pa->values[r * d + j];
                ps->grad[r] += acc;
            }
        }
    });
}

Tensor linear(const Tensor& a, const Tensor& w) {
    expect(a.rank() >= 2, "linear: input must be rank >= 2");
    expect(w.rank() == 2, "linear: weight must be rank 2");
    const int64_t k = last_extent(a);
    expect(w.extent(0) == k, "linear: inner extents differ: " + shape_str(a.shape()) + " x " +
                                 shape_str(w.shape()));
    const int64_t m = w.extent(1);
    const int64_t rows = a.numel() / k;
    Shape out_shape = a.shape();
    out_shape.back() = m;
    std::vector<double> out(static_cast<size_t>(rows * m), 0.0);
    const auto& av = a.values();
    const auto& wv = w.values();
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t p = 0; p < k; ++p) {
            const double x = av[r * k + p];
            if (x == 0.0) continue;
            const double* wrow = wv.data() + p * m;
            double* orow = out.data() + r * m;
            for (int64_t j = 0; j < m; ++j) orow[j] += x * wrow[j];
        }
    ImplPtr pa = a.impl(), pw = w.impl();
    return make_node(std::move(out_shape), std::move(out), {a, w},
                     [pa, pw, rows, k, m](TensorImpl& self) {
                         if (pa->requires_grad) {
                             pa->ensure_grad();
                             for (int64_t r = 0; r < rows; ++r)
                                 for (int64_t p = 0; p < k; ++p) {
                                     double acc = 0.0;
                                     const double* wrow = pw->values.data() + p * m;
                                     const double* grow = self.grad.data() + r * m;
                                     for (int64_t j = 0; j < m; ++j) acc += grow[j] * wrow[j];
                                     pa->grad[r * k + p] += acc;
                                 }
                         }
                         if (pw->requires_grad) {
                             pw->ensure_grad();
                             for (int64_t r = 0; r < rows; ++r)
                                 for (int64_t p = 0; p < k; ++p) {
                                     const double x = pa->values[r * k + p];
                                     if (x == 0.0) continue;
                                     double* wg = pw->grad.data() + p * m;
                                     const double* grow = self.grad.data() + r * m;
                                     for (int64_t j = 0; j < m; ++j) wg[j] += x * grow[j];
                                 }
                         }
                     });
}

Tensor matmul_bt(const Tensor& a, const Tensor& b) {
    expect(a.rank() == 2 && b.rank() == 2, "matmul_bt: inputs must be rank 2");
    const int64_t k = a.extent(1);
    expect(b.extent(1) == k, "matmul_bt: inner extents differ");
    const int64_t m = a.extent(0), n = b.extent(0);
    std::vector<double> out(static_cast<size_t>(m * n), 0.0);
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) {
            double acc = 0.0;
            const double* ar = a.values().data() + i * k;
            const double* br = b.values().data() + j * k;
            for (int64_t p = 0; p < k; ++p) acc += ar[p] * br[p];
            out[i * n + j] = acc;
        }
    ImplPtr pa = a.impl(), pb = b.impl();
    return make_node({m, n}, std::move(out), {a, b}, [pa, pb, m, n, k](TensorImpl& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < n; ++j) {
                    const double g = self.grad[i * n + j];
                    if (g == 0.0) continue;
                    for (int64_t p = 0; p < k; ++p) pa->grad[i * k + p] += g * pb->values[j * k + p];
                }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < n; ++j) {
                    const double g = self.grad[i * n + j];
                    if (g == 0.0) continue;
                    for (int64_t p = 0; p < k; ++p) pb->grad[j * k + p] += g * pa->values[i * k + p];
                }
        }
    });
}

Tensor batch_matmul(const Tensor& a, const Tensor& b) {
    expect(a.rank() == 3 && b.rank() == 3, "batch_matmul: inputs must be rank 3");
    const int64_t B = a.extent(0), n = a.extent(1), m = a.extent(2), k = b.extent(2);
    expect(b.extent(0) == B && b.extent(1) == m, "batch_matmul: shape mismatch");
    std::vector<double> out(static_cast<size_t>(B * n * k), 0.0);
    for (int64_t bi = 0; bi < B; ++bi) {
        const double* ab = a.values().data() + bi * n * m;
        const double* bb = b.values().data() + bi * m * k;
        double* ob = out.data() + bi * n * k;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t p = 0; p < m; ++p) {
                const double x = ab[i * m + p];
                if (x == 0.0) continue;
                for (int64_t j = 0; j < k; ++j) ob[i * k + j] += x * bb[p * k + j];
            }
    }
    ImplPtr pa = a.impl(), pb = b.impl();
    return make_node({B, n, k}, std::move(out), {a, b}, [pa, pb, B, n, m, k](TensorImpl& self) {
        for (int64_t bi = 0; bi < B; ++bi) {
            const double* gb = self.grad.data() + bi * n * k;
            if (pa->requires_grad) {
                pa->ensure_grad();
                double* ag = pa->grad.data() + bi * n * m;
                const double* bb = pb->values.data() + bi * m * k;
                for (int64_t i = 0; i < n; ++i)
                    for (int64_t p = 0; p < m; ++p) {
                        double acc = 0.0;
                        for (int64_t j = 0; j < k; ++j) acc += gb[i * k + j] * bb[p * k + j];
                        ag[i * m + p] += acc;
                    }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                double* bg = pb->grad.data() + bi * m * k;
                const double* ab = pa->values.data() + bi * n * m;
                for (int64_t i = 0; i < n; ++i)
                    for (int64_t p = 0; p < m; ++p) {
                        const double x = ab[i * m + p];
                        if (x == 0.0) continue;
                        for (int64_t j = 0; j < k; ++j) bg[p * k + j] += x * gb[i * k + j];
                    }
            }
        }
    });
}

Tensor batch_matmul_bt(const Tensor& a, const Tensor& b) {
    expect(a.rank() == 3 && b.rank() == 3, "batch_matmul_bt: inputs must be rank 3");
    const int64_t B = a.extent(0), n = a.extent(1), k = a.extent(2), m = b.extent(1);
    expect(b.extent(0) == B && b.extent(2) == k, "batch_matmul_bt: shape mismatch");
    std::vector<double> out(static_cast<size_t>(B * n * m), 0.0);
    for (int64_t bi = 0; bi < B; ++bi) {
        const double* ab = a.values().data() + bi * n * k;
        const double* bb = b.values().data() + bi * m * k;
        double* ob = out.data() + bi * n * m;
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < m; ++j) {
                double acc = 0.0;
                for (int64_t p = 0; p < k; ++p) acc += ab[i * k + p] * bb[j * k + p];
                ob[i * m + j] = acc;
            }
    }
    ImplPtr pa = a.impl(), pb = b.impl();
    return make_node({B, n, m}, std::move(out), {a, b}, [pa, pb, B, n, m, k](TensorImpl& self) {
        for (int64_t bi = 0; bi < B; ++bi) {
            const double* gb = self.grad.data() + bi * n * m;
            if (pa->requires_grad) {
                pa->ensure_grad();
                double* ag = pa->grad.data() + bi * n * k;
                const double* bb = pb->values.data() + bi * m * k;
                for (int64_t i = 0; i < n; ++i)
                    for (int64_t j = 0; j < m; ++j) {
                        const double g = gb[i * m + j];
                        if (g == 0.0) continue;
                        for (int64_t p = 0; p < k; ++p) ag[i * k + p] += g * bb[j * k + p];
                    }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                double* bg = pb->grad.data() + bi * m * k;
                const double* ab = pa->values.data() + bi * n * k;
                for (int64_t i = 0; i < n; ++i)
                    for (int64_t j = 0; j < m; ++j) {
                        const double g = gb[i * m + j];
                        if (g == 0.0) continue;
                        for (int64_t p = 0; p < k; ++p) bg[j * k + p] += g * ab[i * k + p];
                    }
            }
        }
    });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
    expect(!parts.empty(), "concat_last: no parts");
    Shape lead = parts.front().shape();
    lead.pop_back();
    int64_t total = 0;
    for (const auto& p : parts) {
        Shape l = p.shape();
        int64_t d = l.back();
        l.pop_back();
        expect(l == lead, "concat_last: leading extents differ");
        total += d;
    }
    const int64_t rows = shape_numel(lead);
    Shape out_shape = lead;
    out_shape.push_back(total);
    std::vector<double> out(static_cast<size_t>(rows * total));
    std::vector<int64_t> offs;
    int64_t off = 0;
    for (const auto& p : parts) {
        const int64_t d = p.shape().back();
        offs.push_back(off);
        for (int64_t r = 0; r < rows; ++r)
            std::copy_n(p.values().data() + r * d, d, out.data() + r * total + off);
        off += d;
    }
    std::vector<ImplPtr> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    return make_node(std::move(out_shape), std::move(out), parts,
                     [impls, offs, rows, total](TensorImpl& self) {
                         for (size_t pi = 0; pi < impls.size(); ++pi) {
                             const auto& p = impls[pi];
                             if (!p->requires_grad) continue;
                             p->ensure_grad();
                             const int64_t d = p->shape.back();
                             for (int64_t r = 0; r < rows; ++r)
                                 for (int64_t j = 0; j < d; ++j)
                                     p->grad[r * d + j] += self.grad[r * total + offs[pi] + j];
                         }
                     });
}

Tensor slice_last(const Tensor& a, int64_t start, int64_t len) {
    const int64_t d = last_extent(a);
    expect(start >= 0 && len >= 0 && start + len <= d, "slice_last: range out of bounds");
    const int64_t rows = a.numel() / d;
    Shape out_shape = a.shape();
    out_shape.back() = len;
    std::vector<double> out(static_cast<size_t>(rows * len));
    for (int64_t r = 0; r < rows; ++r)
        std::copy_n(a.values().data() + r * d + start, len, out.data() + r * len);
    ImplPtr pa = a.impl();
    return make_node(std::move(out_shape), std::move(out), {a},
                     [pa, start, len, rows, d](TensorImpl& self) {
                         if (!pa->requires_grad) return;
                         pa->ensure_grad();
                         for (int64_t r = 0; r < rows; ++r)
                             for (int64_t j = 0; j < len; ++j)
                                 pa->grad[r * d + start + j] += self.grad[r * len + j];
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    expect(!parts.empty(), "concat_rows: no parts");
    const int64_t d = parts.front().shape().back();
    int64_t rows = 0;
    for (const auto& p : parts) {
        expect(p.rank() == 2 && p.extent(1) == d, "concat_rows: parts must be [n_i, d]");
        rows += p.extent(0);
    }
    std::vector<double> out;
    out.reserve(static_cast<size_t>(rows * d));
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    std::vector<ImplPtr> impls;
    for (const auto& p : parts) impls.push_back(p.impl());
    return make_node({rows, d}, std::move(out), parts, [impls, d](TensorImpl& self) {
        int64_t row = 0;
        for (const auto& p : impls) {
            const int64_t n = p->shape[0];
            if (p->requires_grad) {
                p->ensure_grad();
                for (int64_t i = 0; i < n * d; ++i) p->grad[i] += self.grad[row * d + i];
            }
            row += n;
        }
    });
}

Tensor pad_stack(const std::vector<Tensor>& rows, int64_t n_max) {
    expect(!rows.empty(), "pad_stack: empty batch");
    const int64_t d = rows.front().shape().back();
    const int64_t B = static_cast<int64_t>(rows.size());
    for (const auto& r : rows) {
        expect(r.rank() == 2 && r.extent(1) == d, "pad_stack: rows must be [n_i, d]");
        expect(r.extent(0) <= n_max, "pad_stack: row longer than n_max");
    }
    std::vector<double> out(static_cast<size_t>(B * n_max * d), 0.0);
    for (int64_t b = 0; b < B; ++b) {
        const auto& r = rows[b];
        std::copy(r.values().begin(), r.values().end(), out.begin() + b * n_max * d);
    }
    std::vector<ImplPtr> impls;
    for (const auto& r : rows) impls.push_back(r.impl());
    return make_node({B, n_max, d}, std::move(out), rows, [impls, n_max, d](TensorImpl& self) {
        for (size_t b = 0; b < impls.size(); ++b) {
            const auto& p = impls[b];
            if (!p->requires_grad) continue;
            p->ensure_grad();
            const int64_t n = p->shape[0];
            const double* g = self.grad.data() + static_cast<int64_t>(b) * n_max * d;
            for (int64_t i = 0; i < n * d; ++i) p->grad[i] += g[i];
        }
    });
}

Tensor gather_rows(const Tensor& a, const std::vector<int64_t>& idx) {
    expect(a.rank() == 3, "gather_rows: input must be [B, n, d]");
    const int64_t B = a.extent(0), n = a.extent(1), d = a.extent(2);
    expect(static_cast<int64_t>(idx.size()) == B, "gather_rows: one index per batch row");
    for (int64_t i : idx) expect(i >= 0 && i < n, "gather_rows: index out of range");
    std::vector<double> out(static_cast<size_t>(B * d));
    for (int64_t b = 0; b < B; ++b)
        std::copy_n(a.values().data() + (b * n + idx[b]) * d, d, out.data() + b * d);
    ImplPtr pa = a.impl();
    return make_node({B, d}, std::move(out), {a}, [pa, idx, n, d](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t b = 0; b < idx.size(); ++b)
            for (int64_t j = 0; j < d; ++j)
                pa->grad[(static_cast<int64_t>(b) * n + idx[b]) * d + j] +=
                    self.grad[static_cast<int64_t>(b) * d + j];
    });
}

Tensor embed_rows(const Tensor& main, const Tensor& overflow, const std::vector<int64_t>& ids) {
    expect(main.rank() == 2, "embed_rows: table must be rank 2");
    const int64_t V = main.extent(0), d = main.extent(1);
    const int64_t O = overflow.defined() ? overflow.extent(0) : 0;
    const int64_t n = static_cast<int64_t>(ids.size());
    std::vector<double> out(static_cast<size_t>(n * d));
    for (int64_t i = 0; i < n; ++i) {
        const int64_t id = ids[i];
        if (id >= 0 && id < V) {
            std::copy_n(main.values().data() + id * d, d, out.data() + i * d);
        } else if (id >= V && id - V < O) {
            std::copy_n(overflow.values().data() + (id - V) * d, d, out.data() + i * d);
        } else {
            throw std::out_of_range("embed_rows: token id " + std::to_string(id) +
                                    " outside table of " + std::to_string(V + O) + " rows");
        }
    }
    std::vector<Tensor> parents = {main};
    if (overflow.defined()) parents.push_back(overflow);
    ImplPtr pm = main.impl();
    ImplPtr po = overflow.defined() ? overflow.impl() : nullptr;
    return make_node({n, d}, std::move(out), parents, [pm, po, ids, V, d](TensorImpl& self) {
        for (size_t i = 0; i < ids.size(); ++i) {
            const int64_t id = ids[i];
            if (id < V) {
                if (!pm->requires_grad) continue;
                pm->ensure_grad();
                for (int64_t j = 0; j < d; ++j)
                    pm->grad[id * d + j] += self.grad[static_cast<int64_t>(i) * d + j];
            } else if (po && po->requires_grad) {
                po->ensure_grad();
                for (int64_t j = 0; j < d; ++j)
                    po->grad[(id - V) * d + j] += self.grad[static_cast<int64_t>(i) * d + j];
            }
        }
    });
}

Tensor softmax_lastdim(const Tensor& a) {
    const int64_t d = last_extent(a);
    const int64_t rows = a.numel() / d;
    std::vector<double> out(a.values());
    for (int64_t r = 0; r < rows; ++r) {
        double* row = out.data() + r * d;
        double mx = row[0];
        for (int64_t j = 1; j < d; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int64_t j = 0; j < d; ++j) row[j] /= sum;
    }
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa, rows, d](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const double* s = self.values.data() + r * d;
            const double* g = self.grad.data() + r * d;
            double dot = 0.0;
            for (int64_t j = 0; j < d; ++j) dot += g[j] * s[j];
            for (int64_t j = 0; j < d; ++j) pa->grad[r * d + j] += s[j] * (g[j] - dot);
        }
    });
}

Tensor layer_norm_lastdim(const Tensor& a, const Tensor& gain, const Tensor& bias, double eps) {
    const int64_t d = last_extent(a);
    expect(gain.rank() == 1 && gain.extent(0) == d && bias.rank() == 1 && bias.extent(0) == d,
           "layer_norm: gain/bias must be [" + std::to_string(d) + "]");
    const int64_t rows = a.numel() / d;
    std::vector<double> out(static_cast<size_t>(rows * d));
    auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(rows * d));
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const double* x = a.values().data() + r * d;
        double mean = 0.0;
        for (int64_t j = 0; j < d; ++j) mean += x[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (int64_t j = 0; j < d; ++j) {
            const double c = x[j] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = inv;
        for (int64_t j = 0; j < d; ++j) {
            const double h = (x[j] - mean) * inv;
            (*xhat)[r * d + j] = h;
            out[r * d + j] = h * gain.values()[j] + bias.values()[j];
        }
    }
    ImplPtr pa = a.impl(), pg = gain.impl(), pb = bias.impl();
    return make_node(a.shape(), std::move(out), {a, gain, bias},
                     [pa, pg, pb, xhat, inv_std, rows, d](TensorImpl& self) {
                         if (pg->requires_grad) {
                             pg->ensure_grad();
                             for (int64_t r = 0; r < rows; ++r)
                                 for (int64_t j = 0; j < d; ++j)
                                     pg->grad[j] += self.grad[r * d + j] * (*xhat)[r * d + j];
                         }
                         if (pb->requires_grad) {
                             pb->ensure_grad();
                             for (int64_t r = 0; r < rows; ++r)
                                 for (int64_t j = 0; j < d; ++j) pb->grad[j] += self.grad[r * d + j];
                         }
                         if (pa->requires_grad) {
                             pa->ensure_grad();
                             for (int64_t r = 0; r < rows; ++r) {
                                 const double* g = self.grad.data() + r * d;
                                 const double* h = xhat->data() + r * d;
                                 double mean_t = 0.0, mean_th = 0.0;
                                 for (int64_t j = 0; j < d; ++j) {
                                     const double t = g[j] * pg->values[j];
                                     mean_t += t;
                                     mean_th += t * h[j];
                                 }
                                 mean_t /= static_cast<double>(d);
                                 mean_th /= static_cast<double>(d);
                                 const double inv = (*inv_std)[r];
                                 for (int64_t j = 0; j < d; ++j) {
                                     const double t = g[j] * pg->values[j];
                                     pa->grad[r * d + j] += inv * (t - mean_t - h[j] * mean_th);
                                 }
                             }
                         }
                     });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            if (pa->values[i] > 0.0) pa->grad[i] += self.grad[i];
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const double s = self.values[i];
            pa->grad[i] += self.grad[i] * s * (1.0 - s);
        }
    });
}

Tensor exp_t(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = std::exp(v);
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * self.values[i];
    });
}

Tensor log_t(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = std::log(v);
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] / pa->values[i];
    });
}

Tensor sqrt_t(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = std::sqrt(v);
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            pa->grad[i] += self.grad[i] * 0.5 / self.values[i];
    });
}

Tensor reciprocal(const Tensor& a) {
    std::vector<double> out(a.values());
    for (double& v : out) v = 1.0 / v;
    ImplPtr pa = a.impl();
    return make_node(a.shape(), std::move(out), {a}, [pa](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const double r = self.values[i];
            pa->grad[i] -= self.grad[i] * r * r;
        }
    });
}

Tensor sum_all(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    ImplPtr pa = a.impl();
    return make_node({}, {acc}, {a}, [pa](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        const double g = self.grad[0];
        for (double& gv : pa->grad) gv += g;
    });
}

Tensor mean_all(const Tensor& a) {
    expect(a.numel() > 0, "mean_all: empty tensor");
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    const double n = static_cast<double>(a.numel());
    ImplPtr pa = a.impl();
    return make_node({}, {acc / n}, {a}, [pa, n](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        const double g = self.grad[0] / n;
        for (double& gv : pa->grad) gv += g;
    });
}

Tensor sum_last(const Tensor& a) {
    const int64_t d = last_extent(a);
    const int64_t rows = a.numel() / d;
    Shape out_shape = a.shape();
    out_shape.back() = 1;
    std::vector<double> out(static_cast<size_t>(rows), 0.0);
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < d; ++j) out[r] += a.values()[r * d + j];
    ImplPtr pa = a.impl();
    return make_node(std::move(out_shape), std::move(out), {a}, [pa, rows, d](TensorImpl& self) {
        if (!pa->requires_grad) return;
        pa->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
            const double g = self.grad[r];
            for (int64_t j = 0; j < d; ++j) pa->grad[r * d + j] += g;
        }
    });
}

}  // namespace varitab
