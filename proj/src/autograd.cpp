#include "avshield/autograd.hpp"

#include <cmath>
#include <unordered_set>

namespace avshield::ag {

void Node::accumulate(const Tensor& g) {
    Tensor& dst = ensure_grad();
    double* d = dst.data();
    const double* s = g.data();
    const std::int64_t n = dst.size();
    for (std::int64_t i = 0; i < n; ++i) d[i] += s[i];
}

Tensor& Node::ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor(value.shape());
    return grad;
}

NodePtr constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return n;
}

NodePtr leaf(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    return n;
}

namespace {

NodePtr make(Tensor value, std::vector<NodePtr> parents, std::function<void(Node&)> bwd) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    for (const auto& p : parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(bwd);
    }
    return n;
}

void check_same_shape(const NodePtr& a, const NodePtr& b, const char* op) {
    if (!a->value.same_shape(b->value)) throw InputError(std::string(op) + ": shape mismatch");
}

} // namespace

void backward(const NodePtr& root) {
    if (root->value.size() != 1) throw InputError("backward: root must be scalar");
    // reverse topological order via iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.size() == n->value.size()) n->backward_fn(*n);
    }
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "add");
    Tensor out(a->value.shape());
    const std::int64_t n = out.size();
    for (std::int64_t i = 0; i < n; ++i) out[i] = a->value[i] + b->value[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) a->accumulate(self.grad);
        if (b->requires_grad) b->accumulate(self.grad);
    });
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "sub");
    Tensor out(a->value.shape());
    const std::int64_t n = out.size();
    for (std::int64_t i = 0; i < n; ++i) out[i] = a->value[i] - b->value[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) a->accumulate(self.grad);
        if (b->requires_grad) {
            Tensor& g = b->ensure_grad();
            for (std::int64_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
    check_same_shape(a, b, "mul");
    Tensor out(a->value.shape());
    const std::int64_t n = out.size();
    for (std::int64_t i = 0; i < n; ++i) out[i] = a->value[i] * b->value[i];
    return make(std::move(out), {a, b}, [a, b](Node& self) {
        const std::int64_t n = self.grad.size();
        if (a->requires_grad) {
            Tensor& g = a->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i) g[i] += self.grad[i] * b->value[i];
        }
        if (b->requires_grad) {
            Tensor& g = b->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i) g[i] += self.grad[i] * a->value[i];
        }
    });
}

NodePtr add_scalar(const NodePtr& a, double s) {
    Tensor out(a->value.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + s;
    return make(std::move(out), {a}, [a](Node& self) { a->accumulate(self.grad); });
}

NodePtr mul_scalar(const NodePtr& a, double s) {
    Tensor out(a->value.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * s;
    return make(std::move(out), {a}, [a, s](Node& self) {
        Tensor& g = a->ensure_grad();
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
    });
}

NodePtr tanh_op(const NodePtr& a) {
    Tensor out(a->value.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a->value[i]);
    return make(std::move(out), {a}, [a](Node& self) {
        Tensor& g = a->ensure_grad();
        for (std::int64_t i = 0; i < g.size(); ++i) {
            double y = self.value[i];
            g[i] += self.grad[i] * (1.0 - y * y);
        }
    });
}

NodePtr sqrt_op(const NodePtr& a) {
    Tensor out(a->value.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(a->value[i]);
    return make(std::move(out), {a}, [a](Node& self) {
        Tensor& g = a->ensure_grad();
        for (std::int64_t i = 0; i < g.size(); ++i) {
            double y = self.value[i];
            if (y > 0.0) g[i] += self.grad[i] * 0.5 / y;
            // subgradient 0 at the origin
        }
    });
}

NodePtr log_op(const NodePtr& a) {
    Tensor out(a->value.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::log(a->value[i]);
    return make(std::move(out), {a}, [a](Node& self) {
        Tensor& g = a->ensure_grad();
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / a->value[i];
    });
}

namespace {

// c(M,N) += a(M,K) * b(K,N)
void gemm_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::int64_t>(i) * k;
        double* crow = c + static_cast<std::int64_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + static_cast<std::int64_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// c(M,N) += a(M,K) * b(N,K)^T
void gemm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::int64_t>(i) * k;
        double* crow = c + static_cast<std::int64_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = b + static_cast<std::int64_t>(j) * k;
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// c(K,N) += a(M,K)^T * b(M,N)
void gemm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::int64_t>(i) * k;
        const double* brow = b + static_cast<std::int64_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* crow = c + static_cast<std::int64_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

} // namespace

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    if (a->value.ndim() != 2 || b->value.ndim() != 2 || a->value.dim(1) != b->value.dim(0))
        throw InputError("matmul: incompatible shapes");
    const int m = a->value.dim(0), k = a->value.dim(1), n = b->value.dim(1);
    Tensor out({m, n});
    gemm_acc(a->value.data(), b->value.data(), out.data(), m, k, n);
    return make(std::move(out), {a, b}, [a, b, m, k, n](Node& self) {
        if (a->requires_grad) // dA = dC * B^T
            gemm_nt_acc(self.grad.data(), b->value.data(), a->ensure_grad().data(), m, n, k);
        if (b->requires_grad) // dB = A^T * dC
            gemm_tn_acc(a->value.data(), self.grad.data(), b->ensure_grad().data(), m, k, n);
    });
}

NodePtr matmul_nt(const NodePtr& a, const NodePtr& b) {
    if (a->value.ndim() != 2 || b->value.ndim() != 2 || a->value.dim(1) != b->value.dim(1))
        throw InputError("matmul_nt: incompatible shapes");
    const int m = a->value.dim(0), k = a->value.dim(1), n = b->value.dim(0);
    Tensor out({m, n});
    gemm_nt_acc(a->value.data(), b->value.data(), out.data(), m, k, n);
    return make(std::move(out), {a, b}, [a, b, m, k, n](Node& self) {
        if (a->requires_grad) // dA = dC * B
            gemm_acc(self.grad.data(), b->value.data(), a->ensure_grad().data(), m, n, k);
        if (b->requires_grad) // dB = dC^T * A
            gemm_tn_acc(self.grad.data(), a->value.data(), b->ensure_grad().data(), m, n, k);
    });
}

NodePtr linear(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
    auto y = matmul(x, w);
    return add_row_broadcast(y, b);
}

NodePtr reshape(const NodePtr& a, std::vector<int> shape) {
    Tensor out = a->value.reshaped(shape); // shares storage; value-only view
    return make(std::move(out), {a}, [a](Node& self) {
        a->accumulate(self.grad.reshaped(a->value.shape()));
    });
}

NodePtr concat_channels(const NodePtr& a, const NodePtr& b) {
    const auto& sa = a->value.shape();
    const auto& sb = b->value.shape();
    if (sa.size() != 3 || sb.size() != 3 || sa[1] != sb[1] || sa[2] != sb[2])
        throw InputError("concat_channels: incompatible shapes");
    const int ca = sa[0], cb = sb[0], h = sa[1], w = sa[2];
    Tensor out({ca + cb, h, w});
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::copy(a->value.data(), a->value.data() + ca * plane, out.data());
    std::copy(b->value.data(), b->value.data() + cb * plane, out.data() + ca * plane);
    return make(std::move(out), {a, b}, [a, b, ca, cb, plane](Node& self) {
        if (a->requires_grad) {
            Tensor& g = a->ensure_grad();
            for (std::int64_t i = 0; i < ca * plane; ++i) g[i] += self.grad[i];
        }
        if (b->requires_grad) {
            Tensor& g = b->ensure_grad();
            for (std::int64_t i = 0; i < cb * plane; ++i) g[i] += self.grad[ca * plane + i];
        }
    });
}

NodePtr gather_rows(const NodePtr& a, std::vector<int> rows) {
    if (a->value.ndim() != 2) throw InputError("gather_rows: expects matrix");
    const int cols = a->value.dim(1);
    const int n = static_cast<int>(rows.size());
    Tensor out({n, cols});
    for (int i = 0; i < n; ++i)
        std::copy(a->value.data() + static_cast<std::int64_t>(rows[i]) * cols,
                  a->value.data() + static_cast<std::int64_t>(rows[i] + 1) * cols,
                  out.data() + static_cast<std::int64_t>(i) * cols);
    return make(std::move(out), {a}, [a, rows, cols, n](Node& self) {
        Tensor& g = a->ensure_grad();
        for (int i = 0; i < n; ++i) {
            double* dst = g.data() + static_cast<std::int64_t>(rows[i]) * cols;
            const double* src = self.grad.data() + static_cast<std::int64_t>(i) * cols;
            for (int j = 0; j < cols; ++j) dst[j] += src[j];
        }
    });
}

NodePtr frame_signal(const NodePtr& a, int frame_len, int n_frames) {
    if (a->value.ndim() != 1) throw InputError("frame_signal: expects 1-D signal");
    const std::int64_t n = a->value.size();
    Tensor out({n_frames, frame_len});
    for (int f = 0; f < n_frames; ++f)
        for (int l = 0; l < frame_len; ++l) {
            std::int64_t src = static_cast<std::int64_t>(f) * frame_len + l;
            out[static_cast<std::int64_t>(f) * frame_len + l] = src < n ? a->value[src] : 0.0;
        }
    return make(std::move(out), {a}, [a, frame_len, n_frames, n](Node& self) {
        Tensor& g = a->ensure_grad();
        for (int f = 0; f < n_frames; ++f)
            for (int l = 0; l < frame_len; ++l) {
                std::int64_t src = static_cast<std::int64_t>(f) * frame_len + l;
                if (src < n) g[src] += self.grad[static_cast<std::int64_t>(f) * frame_len + l];
            }
    });
}

NodePtr conv3x3(const NodePtr& x, const NodePtr& w, const NodePtr& b) {
    const auto& xs = x->value.shape();
    const auto& ws = w->value.shape();
    if (xs.size() != 3 || ws.size() != 4 || ws[1] != xs[0] || ws[2] != 3 || ws[3] != 3)
        throw InputError("conv3x3: incompatible shapes");
    const int ci = xs[0], h = xs[1], wd = xs[2], co = ws[0];
    if (b->value.size() != co) throw InputError("conv3x3: bias size mismatch");
    Tensor out({co, h, wd});
    const double* xd = x->value.data();
    const double* wdt = w->value.data();
    double* od = out.data();
    const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
    for (int o = 0; o < co; ++o) {
        double* oplane = od + o * plane;
        for (std::int64_t i = 0; i < plane; ++i) oplane[i] = b->value[o];
        for (int c = 0; c < ci; ++c) {
            const double* xplane = xd + c * plane;
            const double* ker = wdt + (static_cast<std::int64_t>(o) * ci + c) * 9;
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx) {
                    const double kv = ker[ky * 3 + kx];
                    if (kv == 0.0) continue;
                    const int y0 = std::max(0, 1 - ky), y1 = std::min(h, h + 1 - ky);
                    const int x0 = std::max(0, 1 - kx), x1 = std::min(wd, wd + 1 - kx);
                    for (int y = y0; y < y1; ++y) {
                        const double* xrow = xplane + static_cast<std::int64_t>(y + ky - 1) * wd;
                        double* orow = oplane + static_cast<std::int64_t>(y) * wd;
                        for (int px = x0; px < x1; ++px) orow[px] += kv * xrow[px + kx - 1];
                    }
                }
        }
    }
    return make(std::move(out), {x, w, b}, [x, w, b, ci, co, h, wd, plane](Node& self) {
        const double* gd = self.grad.data();
        if (b->requires_grad) {
            Tensor& gb = b->ensure_grad();
            for (int o = 0; o < co; ++o) {
                double acc = 0.0;
                const double* gplane = gd + o * plane;
                for (std::int64_t i = 0; i < plane; ++i) acc += gplane[i];
                gb[o] += acc;
            }
        }
        const bool need_x = x->requires_grad, need_w = w->requires_grad;
        if (!need_x && !need_w) return;
        if (need_x) x->ensure_grad();
        if (need_w) w->ensure_grad();
        for (int o = 0; o < co; ++o) {
            const double* gplane = gd + o * plane;
            for (int c = 0; c < ci; ++c) {
                const double* xplane = x->value.data() + c * plane;
                const std::int64_t kbase = (static_cast<std::int64_t>(o) * ci + c) * 9;
                for (int ky = 0; ky < 3; ++ky)
                    for (int kx = 0; kx < 3; ++kx) {
                        const int y0 = std::max(0, 1 - ky), y1 = std::min(h, h + 1 - ky);
                        const int x0 = std::max(0, 1 - kx), x1 = std::min(wd, wd + 1 - kx);
                        double wacc = 0.0;
                        const double kv = w->value[kbase + ky * 3 + kx];
                        for (int y = y0; y < y1; ++y) {
                            const double* grow = gplane + static_cast<std::int64_t>(y) * wd;
                            const std::int64_t xoff = static_cast<std::int64_t>(y + ky - 1) * wd + kx - 1;
                            if (need_w) {
                                const double* xrow = xplane + xoff;
                                for (int px = x0; px < x1; ++px) wacc += grow[px] * xrow[px];
                            }
                            if (need_x && kv != 0.0) {
                                double* gxrow = x->grad.data() + c * plane + xoff;
                                for (int px = x0; px < x1; ++px) gxrow[px] += grow[px] * kv;
                            }
                        }
                        if (need_w) w->grad[kbase + ky * 3 + kx] += wacc;
                    }
            }
        }
    });
}

NodePtr avg_pool2(const NodePtr& x) {
    const auto& s = x->value.shape();
    if (s.size() != 3 || s[1] % 2 != 0 || s[2] % 2 != 0)
        throw InputError("avg_pool2: expects (C, even H, even W)");
    const int c = s[0], h = s[1], w = s[2], oh = h / 2, ow = w / 2;
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int px = 0; px < ow; ++px) {
                const double* base = x->value.data() + (static_cast<std::int64_t>(ch) * h + 2 * y) * w + 2 * px;
                out[(static_cast<std::int64_t>(ch) * oh + y) * ow + px] =
                    0.25 * (base[0] + base[1] + base[w] + base[w + 1]);
            }
    return make(std::move(out), {x}, [x, c, h, w, oh, ow](Node& self) {
        Tensor& g = x->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < oh; ++y)
                for (int px = 0; px < ow; ++px) {
                    const double gv = 0.25 * self.grad[(static_cast<std::int64_t>(ch) * oh + y) * ow + px];
                    double* base = g.data() + (static_cast<std::int64_t>(ch) * h + 2 * y) * w + 2 * px;
                    base[0] += gv;
                    base[1] += gv;
                    base[w] += gv;
                    base[w + 1] += gv;
                }
    });
}

NodePtr upsample_nearest2(const NodePtr& x) {
    const auto& s = x->value.shape();
    if (s.size() != 3) throw InputError("upsample_nearest2: expects (C,H,W)");
    const int c = s[0], h = s[1], w = s[2], oh = 2 * h, ow = 2 * w;
    Tensor out({c, oh, ow});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < oh; ++y)
            for (int px = 0; px < ow; ++px)
                out[(static_cast<std::int64_t>(ch) * oh + y) * ow + px] =
                    x->value[(static_cast<std::int64_t>(ch) * h + y / 2) * w + px / 2];
    return make(std::move(out), {x}, [x, c, h, w, oh, ow](Node& self) {
        Tensor& g = x->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < oh; ++y)
                for (int px = 0; px < ow; ++px)
                    g[(static_cast<std::int64_t>(ch) * h + y / 2) * w + px / 2] +=
                        self.grad[(static_cast<std::int64_t>(ch) * oh + y) * ow + px];
    });
}

NodePtr add_channel_bias(const NodePtr& x, const NodePtr& bias) {
    const auto& s = x->value.shape();
    if (s.size() != 3 || bias->value.size() != s[0])
        throw InputError("add_channel_bias: incompatible shapes");
    const int c = s[0];
    const std::int64_t plane = static_cast<std::int64_t>(s[1]) * s[2];
    Tensor out(x->value.shape());
    for (int ch = 0; ch < c; ++ch) {
        const double bv = bias->value[ch];
        for (std::int64_t i = 0; i < plane; ++i) out[ch * plane + i] = x->value[ch * plane + i] + bv;
    }
    return make(std::move(out), {x, bias}, [x, bias, c, plane](Node& self) {
        if (x->requires_grad) x->accumulate(self.grad);
        if (bias->requires_grad) {
            Tensor& g = bias->ensure_grad();
            for (int ch = 0; ch < c; ++ch) {
                double acc = 0.0;
                for (std::int64_t i = 0; i < plane; ++i) acc += self.grad[ch * plane + i];
                g[ch] += acc;
            }
        }
    });
}

NodePtr softmax_rows(const NodePtr& x) {
    if (x->value.ndim() != 2) throw InputError("softmax_rows: expects matrix");
    const int r = x->value.dim(0), c = x->value.dim(1);
    Tensor out({r, c});
    for (int i = 0; i < r; ++i) {
        const double* row = x->value.data() + static_cast<std::int64_t>(i) * c;
        double* orow = out.data() + static_cast<std::int64_t>(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (int j = 0; j < c; ++j) orow[j] /= sum;
    }
    return make(std::move(out), {x}, [x, r, c](Node& self) {
        Tensor& g = x->ensure_grad();
        for (int i = 0; i < r; ++i) {
            const double* y = self.value.data() + static_cast<std::int64_t>(i) * c;
            const double* gy = self.grad.data() + static_cast<std::int64_t>(i) * c;
            double dot = 0.0;
            for (int j = 0; j < c; ++j) dot += y[j] * gy[j];
            double* gx = g.data() + static_cast<std::int64_t>(i) * c;
            for (int j = 0; j < c; ++j) gx[j] += y[j] * (gy[j] - dot);
        }
    });
}

NodePtr mean_over_rows(const NodePtr& x) {
    if (x->value.ndim() != 2) throw InputError("mean_over_rows: expects matrix");
    const int r = x->value.dim(0), c = x->value.dim(1);
    Tensor out({c});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[j] += x->value[static_cast<std::int64_t>(i) * c + j];
    for (int j = 0; j < c; ++j) out[j] /= r;
    return make(std::move(out), {x}, [x, r, c](Node& self) {
        Tensor& g = x->ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) g[static_cast<std::int64_t>(i) * c + j] += self.grad[j] / r;
    });
}

NodePtr mean_over_cols(const NodePtr& x) {
    if (x->value.ndim() != 2) throw InputError("mean_over_cols: expects matrix");
    const int r = x->value.dim(0), c = x->value.dim(1);
    Tensor out({r});
    for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        for (int j = 0; j < c; ++j) acc += x->value[static_cast<std::int64_t>(i) * c + j];
        out[i] = acc / c;
    }
    return make(std::move(out), {x}, [x, r, c](Node& self) {
        Tensor& g = x->ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) g[static_cast<std::int64_t>(i) * c + j] += self.grad[i] / c;
    });
}

NodePtr sub_row_broadcast(const NodePtr& x, const NodePtr& row) {
    if (x->value.ndim() != 2 || row->value.size() != x->value.dim(1))
        throw InputError("sub_row_broadcast: incompatible shapes");
    const int r = x->value.dim(0), c = x->value.dim(1);
    Tensor out({r, c});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<std::int64_t>(i) * c + j] = x->value[static_cast<std::int64_t>(i) * c + j] - row->value[j];
    return make(std::move(out), {x, row}, [x, row, r, c](Node& self) {
        if (x->requires_grad) x->accumulate(self.grad);
        if (row->requires_grad) {
            Tensor& g = row->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) g[j] -= self.grad[static_cast<std::int64_t>(i) * c + j];
        }
    });
}

NodePtr add_row_broadcast(const NodePtr& x, const NodePtr& row) {
    if (x->value.ndim() != 2 || row->value.size() != x->value.dim(1))
        throw InputError("add_row_broadcast: incompatible shapes");
    const int r = x->value.dim(0), c = x->value.dim(1);
    Tensor out({r, c});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            out[static_cast<std::int64_t>(i) * c + j] = x->value[static_cast<std::int64_t>(i) * c + j] + row->value[j];
    return make(std::move(out), {x, row}, [x, row, r, c](Node& self) {
        if (x->requires_grad) x->accumulate(self.grad);
        if (row->requires_grad) {
            Tensor& g = row->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) g[j] += self.grad[static_cast<std::int64_t>(i) * c + j];
        }
    });
}

NodePtr sum_all(const NodePtr& x) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < x->value.size(); ++i) acc += x->value[i];
    return make(Tensor::scalar(acc), {x}, [x](Node& self) {
        Tensor& g = x->ensure_grad();
        const double gv = self.grad[0];
        for (std::int64_t i = 0; i < g.size(); ++i) g[i] += gv;
    });
}

NodePtr mean_all(const NodePtr& x) {
    return mul_scalar(sum_all(x), 1.0 / static_cast<double>(x->value.size()));
}

} // namespace avshield::ag
