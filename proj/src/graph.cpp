#include "osids/nn/graph.hpp"

#include <algorithm>
#include <cmath>

namespace osids::nn {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeMismatch(msg);
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

BatchNormState BatchNormState::init(const std::string& name, int channels) {
    BatchNormState bn;
    bn.gamma = Parameter(name + ".gamma", Tensor({channels}));
    bn.gamma.value.fill(1.0f);
    bn.beta = Parameter(name + ".beta", Tensor({channels}));
    bn.running_mean = Tensor({channels});
    bn.running_var = Tensor({channels});
    bn.running_var.fill(1.0f);
    return bn;
}

void Graph::check(Id id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw BackwardBeforeForward("node id " + std::to_string(id) + " was never recorded");
}

double Graph::scalar(Id id) const {
    check(id);
    const Node& n = node(id);
    if (n.has_scalar) return n.scalar_value;
    if (n.value.size() == 1) return n.value[0];
    throw ShapeMismatch("scalar() called on non-scalar node");
}

Graph::Id Graph::leaf(Tensor value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Graph::Id Graph::param(Parameter& p) {
    Node n;
    n.value = p.value;
    n.bound = &p;
    Id id = static_cast<Id>(nodes_.size());
    n.back = [id](Graph& g) {
        Node& self = g.node(id);
        float* dst = self.bound->grad.data();
        const float* src = self.grad.data();
        for (int i = 0; i < self.grad.size(); ++i) dst[i] += src[i];
    };
    return push(std::move(n));
}

Graph::Id Graph::conv1d(Id xid, Id wid, Id bid, int stride) {
    check(xid); check(wid); check(bid);
    const Tensor& x = node(xid).value;
    const Tensor& w = node(wid).value;
    const Tensor& b = node(bid).value;
    require(x.ndim() == 3, "conv1d: input must be [batch, channels, length], got " +
                               Tensor::shape_str(x.shape()));
    require(w.ndim() == 3, "conv1d: kernel must be [out, in, k]");
    require(b.ndim() == 1 && b.dim(0) == w.dim(0), "conv1d: bias must match out channels");
    require(x.dim(1) == w.dim(1), "conv1d: channel mismatch");
    require(stride >= 1, "conv1d: stride must be positive");
    const int batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const int cout = w.dim(0), k = w.dim(2);
    require(len >= k, "conv1d: input length " + std::to_string(len) +
                          " shorter than kernel " + std::to_string(k));
    const int lout = (len - k) / stride + 1;

    Tensor y({batch, cout, lout});
    for (int n = 0; n < batch; ++n)
        for (int o = 0; o < cout; ++o)
            for (int t = 0; t < lout; ++t) {
                double acc = b[o];
                for (int c = 0; c < cin; ++c) {
                    const float* xr = x.data() + (static_cast<std::size_t>(n) * cin + c) * len +
                                      static_cast<std::size_t>(t) * stride;
                    const float* wr = w.data() + (static_cast<std::size_t>(o) * cin + c) * k;
                    for (int i = 0; i < k; ++i) acc += static_cast<double>(xr[i]) * wr[i];
                }
                y.at(n, o, t) = static_cast<float>(acc);
            }

    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid, wid, bid, stride, batch, cin, cout, len, lout, k](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        const Tensor& x = g.node(xid).value;
        const Tensor& w = g.node(wid).value;
        std::vector<double> dx(static_cast<std::size_t>(batch) * cin * len, 0.0);
        std::vector<double> dw(static_cast<std::size_t>(cout) * cin * k, 0.0);
        std::vector<double> db(static_cast<std::size_t>(cout), 0.0);
        for (int n = 0; n < batch; ++n)
            for (int o = 0; o < cout; ++o)
                for (int t = 0; t < lout; ++t) {
                    const double gy = dy.at(n, o, t);
                    db[o] += gy;
                    for (int c = 0; c < cin; ++c) {
                        const std::size_t xoff =
                            (static_cast<std::size_t>(n) * cin + c) * len +
                            static_cast<std::size_t>(t) * stride;
                        const std::size_t woff = (static_cast<std::size_t>(o) * cin + c) * k;
                        for (int i = 0; i < k; ++i) {
                            dx[xoff + i] += gy * w.data()[woff + i];
                            dw[woff + i] += gy * x.data()[xoff + i];
                        }
                    }
                }
        float* gx = g.node(xid).grad.data();
        for (std::size_t i = 0; i < dx.size(); ++i) gx[i] += static_cast<float>(dx[i]);
        float* gw = g.node(wid).grad.data();
        for (std::size_t i = 0; i < dw.size(); ++i) gw[i] += static_cast<float>(dw[i]);
        float* gb = g.node(bid).grad.data();
        for (std::size_t i = 0; i < db.size(); ++i) gb[i] += static_cast<float>(db[i]);
    };
    return push(std::move(out));
}

Graph::Id Graph::batch_norm(Id xid, BatchNormState& bn, bool training) {
    check(xid);
    // bind gamma/beta before taking references: param() grows the node vector
    const Id gid = param(bn.gamma);
    const Id bid = param(bn.beta);
    const Tensor& x = node(xid).value;
    require(x.ndim() == 2 || x.ndim() == 3, "batch_norm: input must be 2-D or 3-D");
    const int batch = x.dim(0);
    const int channels = x.dim(1);
    const int spatial = x.ndim() == 3 ? x.dim(2) : 1;
    require(channels == bn.gamma.value.dim(0), "batch_norm: channel count mismatch");

    const double m_count = static_cast<double>(batch) * spatial;
    std::vector<double> mean(channels), inv_std(channels);
    if (training) {
        for (int c = 0; c < channels; ++c) {
            double sum = 0.0, sum_sq = 0.0;
            for (int n = 0; n < batch; ++n) {
                const float* row =
                    x.data() + (static_cast<std::size_t>(n) * channels + c) * spatial;
                for (int l = 0; l < spatial; ++l) {
                    sum += row[l];
                    sum_sq += static_cast<double>(row[l]) * row[l];
                }
            }
            const double mu = sum / m_count;
            const double var = std::max(0.0, sum_sq / m_count - mu * mu);
            mean[c] = mu;
            inv_std[c] = 1.0 / std::sqrt(var + bn.epsilon);
            bn.running_mean[c] = static_cast<float>(
                (1.0 - bn.momentum) * bn.running_mean[c] + bn.momentum * mu);
            bn.running_var[c] = static_cast<float>(
                (1.0 - bn.momentum) * bn.running_var[c] + bn.momentum * var);
        }
    } else {
        for (int c = 0; c < channels; ++c) {
            mean[c] = bn.running_mean[c];
            inv_std[c] = 1.0 / std::sqrt(static_cast<double>(bn.running_var[c]) + bn.epsilon);
        }
    }

    Tensor y(x.shape());
    for (int n = 0; n < batch; ++n)
        for (int c = 0; c < channels; ++c) {
            const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * spatial;
            const double gamma = bn.gamma.value[c], beta = bn.beta.value[c];
            for (int l = 0; l < spatial; ++l) {
                const double xhat = (x.data()[off + l] - mean[c]) * inv_std[c];
                y.data()[off + l] = static_cast<float>(gamma * xhat + beta);
            }
        }

    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid, gid, bid, training, batch, channels, spatial, mean,
                inv_std](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        const Tensor& x = g.node(xid).value;
        const double m_count = static_cast<double>(batch) * spatial;
        std::vector<double> dgamma(channels, 0.0), dbeta(channels, 0.0);
        for (int c = 0; c < channels; ++c) {
            for (int n = 0; n < batch; ++n) {
                const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * spatial;
                for (int l = 0; l < spatial; ++l) {
                    const double xhat = (x.data()[off + l] - mean[c]) * inv_std[c];
                    dbeta[c] += dy.data()[off + l];
                    dgamma[c] += dy.data()[off + l] * xhat;
                }
            }
        }
        const Tensor& gamma = g.node(gid).value;
        Tensor& dx = g.node(xid).grad;
        for (int c = 0; c < channels; ++c) {
            const double gsc = gamma[c] * inv_std[c];
            for (int n = 0; n < batch; ++n) {
                const std::size_t off = (static_cast<std::size_t>(n) * channels + c) * spatial;
                for (int l = 0; l < spatial; ++l) {
                    const double gy = dy.data()[off + l];
                    double d;
                    if (training) {
                        const double xhat = (x.data()[off + l] - mean[c]) * inv_std[c];
                        d = gsc * (gy - dbeta[c] / m_count - xhat * dgamma[c] / m_count);
                    } else {
                        d = gsc * gy;
                    }
                    dx.data()[off + l] += static_cast<float>(d);
                }
            }
        }
        float* gg = g.node(gid).grad.data();
        float* gb = g.node(bid).grad.data();
        for (int c = 0; c < channels; ++c) {
            gg[c] += static_cast<float>(dgamma[c]);
            gb[c] += static_cast<float>(dbeta[c]);
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::leaky_relu(Id xid, double slope) {
    check(xid);
    const Tensor& x = node(xid).value;
    Tensor y(x.shape());
    for (int i = 0; i < x.size(); ++i)
        y[i] = x[i] > 0.0f ? x[i] : static_cast<float>(slope * x[i]);
    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid, slope](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        const Tensor& x = g.node(xid).value;
        Tensor& dx = g.node(xid).grad;
        for (int i = 0; i < x.size(); ++i)
            dx[i] += x[i] > 0.0f ? dy[i] : static_cast<float>(slope * dy[i]);
    };
    return push(std::move(out));
}

Graph::Id Graph::sigmoid(Id xid) {
    check(xid);
    const Tensor& x = node(xid).value;
    Tensor y(x.shape());
    for (int i = 0; i < x.size(); ++i)
        y[i] = static_cast<float>(stable_sigmoid(x[i]));
    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        const Tensor& y = g.node(id).value;
        Tensor& dx = g.node(xid).grad;
        for (int i = 0; i < y.size(); ++i) {
            const double s = y[i];
            dx[i] += static_cast<float>(dy[i] * s * (1.0 - s));
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::softmax(Id xid) {
    check(xid);
    const Tensor& x = node(xid).value;
    require(x.ndim() == 2, "softmax: input must be [batch, n]");
    const int batch = x.dim(0), n = x.dim(1);
    Tensor y(x.shape());
    for (int r = 0; r < batch; ++r) {
        double m = x.at(r, 0);
        for (int i = 1; i < n; ++i) m = std::max(m, static_cast<double>(x.at(r, i)));
        double z = 0.0;
        for (int i = 0; i < n; ++i) z += std::exp(static_cast<double>(x.at(r, i)) - m);
        for (int i = 0; i < n; ++i)
            y.at(r, i) = static_cast<float>(std::exp(static_cast<double>(x.at(r, i)) - m) / z);
    }
    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid, batch, n](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        const Tensor& y = g.node(id).value;
        Tensor& dx = g.node(xid).grad;
        for (int r = 0; r < batch; ++r) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i)
                dot += static_cast<double>(dy.at(r, i)) * y.at(r, i);
            for (int i = 0; i < n; ++i)
                dx.at(r, i) +=
                    static_cast<float>(y.at(r, i) * (static_cast<double>(dy.at(r, i)) - dot));
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::linear(Id xid, Id wid, Id bid) {
    check(xid); check(wid); check(bid);
    const Tensor& x = node(xid).value;
    const Tensor& w = node(wid).value;
    const Tensor& b = node(bid).value;
    require(x.ndim() == 2, "linear: input must be [batch, in]");
    require(w.ndim() == 2, "linear: weight must be [out, in]");
    require(x.dim(1) == w.dim(1), "linear: input width " + std::to_string(x.dim(1)) +
                                      " != weight fan-in " + std::to_string(w.dim(1)));
    require(b.ndim() == 1 && b.dim(0) == w.dim(0), "linear: bias must match out dim");
    const int batch = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
    Tensor y({batch, out_dim});
    for (int n = 0; n < batch; ++n) {
        const float* xr = x.data() + static_cast<std::size_t>(n) * in;
        for (int o = 0; o < out_dim; ++o) {
            const float* wr = w.data() + static_cast<std::size_t>(o) * in;
            double acc = b[o];
            for (int i = 0; i < in; ++i) acc += static_cast<double>(xr[i]) * wr[i];
            y.at(n, o) = static_cast<float>(acc);
        }
    }
    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid, wid, bid, batch, in, out_dim](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        const Tensor& x = g.node(xid).value;
        const Tensor& w = g.node(wid).value;
        std::vector<double> dw(static_cast<std::size_t>(out_dim) * in, 0.0);
        std::vector<double> db(static_cast<std::size_t>(out_dim), 0.0);
        std::vector<double> dxr(static_cast<std::size_t>(in));
        Tensor& dx = g.node(xid).grad;
        for (int n = 0; n < batch; ++n) {
            std::fill(dxr.begin(), dxr.end(), 0.0);
            const float* xr = x.data() + static_cast<std::size_t>(n) * in;
            for (int o = 0; o < out_dim; ++o) {
                const double gy = dy.at(n, o);
                db[o] += gy;
                const float* wr = w.data() + static_cast<std::size_t>(o) * in;
                double* dwr = dw.data() + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) {
                    dxr[i] += gy * wr[i];
                    dwr[i] += gy * xr[i];
                }
            }
            float* gx = dx.data() + static_cast<std::size_t>(n) * in;
            for (int i = 0; i < in; ++i) gx[i] += static_cast<float>(dxr[i]);
        }
        float* gw = g.node(wid).grad.data();
        for (std::size_t i = 0; i < dw.size(); ++i) gw[i] += static_cast<float>(dw[i]);
        float* gb = g.node(bid).grad.data();
        for (std::size_t i = 0; i < db.size(); ++i) gb[i] += static_cast<float>(db[i]);
    };
    return push(std::move(out));
}

Graph::Id Graph::reshape(Id xid, std::vector<int> shape) {
    check(xid);
    const Tensor& x = node(xid).value;
    require(Tensor::count(shape) == x.size(), "reshape: element count mismatch");
    Tensor y(std::move(shape));
    std::copy(x.data(), x.data() + x.size(), y.data());
    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        Tensor& dx = g.node(xid).grad;
        for (int i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    };
    return push(std::move(out));
}

Graph::Id Graph::concat_cols(Id aid, Id bid) {
    check(aid); check(bid);
    const Tensor& a = node(aid).value;
    const Tensor& b = node(bid).value;
    require(a.ndim() == 2 && b.ndim() == 2 && a.dim(0) == b.dim(0),
            "concat_cols: inputs must be 2-D with equal row counts");
    const int rows = a.dim(0), p = a.dim(1), q = b.dim(1);
    Tensor y({rows, p + q});
    for (int r = 0; r < rows; ++r) {
        std::copy(a.data() + static_cast<std::size_t>(r) * p,
                  a.data() + static_cast<std::size_t>(r + 1) * p,
                  y.data() + static_cast<std::size_t>(r) * (p + q));
        std::copy(b.data() + static_cast<std::size_t>(r) * q,
                  b.data() + static_cast<std::size_t>(r + 1) * q,
                  y.data() + static_cast<std::size_t>(r) * (p + q) + p);
    }
    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, aid, bid, rows, p, q](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        Tensor& da = g.node(aid).grad;
        Tensor& db = g.node(bid).grad;
        for (int r = 0; r < rows; ++r) {
            const float* row = dy.data() + static_cast<std::size_t>(r) * (p + q);
            float* ar = da.data() + static_cast<std::size_t>(r) * p;
            float* br = db.data() + static_cast<std::size_t>(r) * q;
            for (int i = 0; i < p; ++i) ar[i] += row[i];
            for (int i = 0; i < q; ++i) br[i] += row[p + i];
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::slice_cols(Id xid, int start, int len) {
    check(xid);
    const Tensor& x = node(xid).value;
    require(x.ndim() == 2, "slice_cols: input must be 2-D");
    require(start >= 0 && len >= 1 && start + len <= x.dim(1), "slice_cols: range out of bounds");
    const int rows = x.dim(0), cols = x.dim(1);
    Tensor y({rows, len});
    for (int r = 0; r < rows; ++r)
        std::copy(x.data() + static_cast<std::size_t>(r) * cols + start,
                  x.data() + static_cast<std::size_t>(r) * cols + start + len,
                  y.data() + static_cast<std::size_t>(r) * len);
    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid, rows, cols, start, len](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        Tensor& dx = g.node(xid).grad;
        for (int r = 0; r < rows; ++r) {
            const float* row = dy.data() + static_cast<std::size_t>(r) * len;
            float* xr = dx.data() + static_cast<std::size_t>(r) * cols + start;
            for (int i = 0; i < len; ++i) xr[i] += row[i];
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::add(Id aid, Id bid) { return add_scaled(aid, bid, 1.0); }

Graph::Id Graph::add_scaled(Id aid, Id bid, double c) {
    check(aid); check(bid);
    const Tensor& a = node(aid).value;
    const Tensor& b = node(bid).value;
    require(a.same_shape(b), "add: shape mismatch");
    Tensor y(a.shape());
    for (int i = 0; i < a.size(); ++i)
        y[i] = static_cast<float>(static_cast<double>(a[i]) + c * b[i]);
    Node out;
    out.value = std::move(y);
    if (node(aid).has_scalar && node(bid).has_scalar) {
        out.has_scalar = true;
        out.scalar_value = node(aid).scalar_value + c * node(bid).scalar_value;
    }
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, aid, bid, c](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        Tensor& da = g.node(aid).grad;
        Tensor& db = g.node(bid).grad;
        for (int i = 0; i < dy.size(); ++i) {
            da[i] += dy[i];
            db[i] += static_cast<float>(c * dy[i]);
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::mul(Id aid, Id bid) {
    check(aid); check(bid);
    const Tensor& a = node(aid).value;
    const Tensor& b = node(bid).value;
    require(a.same_shape(b), "mul: shape mismatch");
    Tensor y(a.shape());
    for (int i = 0; i < a.size(); ++i) y[i] = a[i] * b[i];
    Node out;
    out.value = std::move(y);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, aid, bid](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        const Tensor& a = g.node(aid).value;
        const Tensor& b = g.node(bid).value;
        Tensor& da = g.node(aid).grad;
        Tensor& db = g.node(bid).grad;
        for (int i = 0; i < dy.size(); ++i) {
            da[i] += dy[i] * b[i];
            db[i] += dy[i] * a[i];
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::sum(Id xid) {
    check(xid);
    const Tensor& x = node(xid).value;
    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) acc += x[i];
    Node out;
    out.value = Tensor::scalar(static_cast<float>(acc));
    out.has_scalar = true;
    out.scalar_value = acc;
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, xid](Graph& g) {
        const float gy = g.node(id).grad[0];
        Tensor& dx = g.node(xid).grad;
        for (int i = 0; i < dx.size(); ++i) dx[i] += gy;
    };
    return push(std::move(out));
}

Graph::Id Graph::reparameterize(Id mid, Id vid, Id eid) {
    check(mid); check(vid); check(eid);
    const Tensor& mu = node(mid).value;
    const Tensor& logvar = node(vid).value;
    const Tensor& eps = node(eid).value;
    require(mu.same_shape(logvar) && mu.same_shape(eps),
            "reparameterize: mu, logvar and eps must share a shape");
    Tensor sigma(mu.shape());
    Tensor z(mu.shape());
    for (int i = 0; i < mu.size(); ++i) {
        const double s = std::exp(0.5 * logvar[i]);
        sigma[i] = static_cast<float>(s);
        z[i] = static_cast<float>(mu[i] + static_cast<double>(eps[i]) * s);
    }
    Node out;
    out.value = std::move(z);
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, mid, vid, eid, sigma](Graph& g) {
        const Tensor& dy = g.node(id).grad;
        const Tensor& eps = g.node(eid).value;
        Tensor& dmu = g.node(mid).grad;
        Tensor& dlv = g.node(vid).grad;
        for (int i = 0; i < dy.size(); ++i) {
            dmu[i] += dy[i];
            dlv[i] += static_cast<float>(0.5 * dy[i] * eps[i] * sigma[i]);
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::gaussian_kl(Id mid, Id vid) {
    check(mid); check(vid);
    const Tensor& mu = node(mid).value;
    const Tensor& logvar = node(vid).value;
    require(mu.same_shape(logvar), "gaussian_kl: mu/logvar shape mismatch");
    require(mu.ndim() == 2, "gaussian_kl: input must be [batch, latent]");
    const int batch = mu.dim(0);
    double acc = 0.0;
    for (int i = 0; i < mu.size(); ++i) {
        const double m = mu[i], s = logvar[i];
        acc += 0.5 * (m * m + std::exp(s) - s - 1.0);
    }
    acc /= batch;
    Node out;
    out.value = Tensor::scalar(static_cast<float>(acc));
    out.has_scalar = true;
    out.scalar_value = acc;
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, mid, vid, batch](Graph& g) {
        const double gy = static_cast<double>(g.node(id).grad[0]) / batch;
        const Tensor& mu = g.node(mid).value;
        const Tensor& logvar = g.node(vid).value;
        Tensor& dmu = g.node(mid).grad;
        Tensor& dlv = g.node(vid).grad;
        for (int i = 0; i < mu.size(); ++i) {
            dmu[i] += static_cast<float>(gy * mu[i]);
            dlv[i] += static_cast<float>(gy * 0.5 * (std::exp(logvar[i]) - 1.0));
        }
    };
    return push(std::move(out));
}

Graph::Id Graph::cross_entropy(Id lid, std::vector<int> targets) {
    check(lid);
    const Tensor& logits = node(lid).value;
    require(logits.ndim() == 2, "cross_entropy: logits must be [batch, n]");
    const int batch = logits.dim(0), n = logits.dim(1);
    require(static_cast<int>(targets.size()) == batch,
            "cross_entropy: one target per batch row required");
    for (int t : targets)
        if (t < 0 || t >= n)
            throw ShapeMismatch("cross_entropy: target index " + std::to_string(t) +
                                " out of range [0, " + std::to_string(n) + ")");

    std::vector<double> probs(static_cast<std::size_t>(batch) * n);
    double loss = 0.0;
    for (int r = 0; r < batch; ++r) {
        double m = logits.at(r, 0);
        for (int i = 1; i < n; ++i) m = std::max(m, static_cast<double>(logits.at(r, i)));
        double z = 0.0;
        for (int i = 0; i < n; ++i) {
            const double e = std::exp(static_cast<double>(logits.at(r, i)) - m);
            probs[static_cast<std::size_t>(r) * n + i] = e;
            z += e;
        }
        for (int i = 0; i < n; ++i) probs[static_cast<std::size_t>(r) * n + i] /= z;
        loss += m + std::log(z) - logits.at(r, targets[static_cast<std::size_t>(r)]);
    }
    loss /= batch;

    Node out;
    out.value = Tensor::scalar(static_cast<float>(loss));
    out.has_scalar = true;
    out.scalar_value = loss;
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, lid, batch, n, probs = std::move(probs),
                targets = std::move(targets)](Graph& g) {
        const double gy = static_cast<double>(g.node(id).grad[0]) / batch;
        Tensor& dl = g.node(lid).grad;
        for (int r = 0; r < batch; ++r)
            for (int i = 0; i < n; ++i) {
                const double p = probs[static_cast<std::size_t>(r) * n + i];
                const double ind = i == targets[static_cast<std::size_t>(r)] ? 1.0 : 0.0;
                dl.at(r, i) += static_cast<float>(gy * (p - ind));
            }
    };
    return push(std::move(out));
}

Graph::Id Graph::mse(Id aid, Id bid) {
    check(aid); check(bid);
    const Tensor& a = node(aid).value;
    const Tensor& b = node(bid).value;
    require(a.same_shape(b), "mse: shape mismatch " + Tensor::shape_str(a.shape()) + " vs " +
                                 Tensor::shape_str(b.shape()));
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    acc /= a.size();
    Node out;
    out.value = Tensor::scalar(static_cast<float>(acc));
    out.has_scalar = true;
    out.scalar_value = acc;
    Id id = static_cast<Id>(nodes_.size());
    out.back = [id, aid, bid](Graph& g) {
        const Tensor& a = g.node(aid).value;
        const Tensor& b = g.node(bid).value;
        const double gy = 2.0 * g.node(id).grad[0] / a.size();
        Tensor& da = g.node(aid).grad;
        Tensor& db = g.node(bid).grad;
        for (int i = 0; i < a.size(); ++i) {
            const double d = gy * (static_cast<double>(a[i]) - b[i]);
            da[i] += static_cast<float>(d);
            db[i] -= static_cast<float>(d);
        }
    };
    return push(std::move(out));
}

void Graph::backward(Id loss) {
    if (nodes_.empty())
        throw BackwardBeforeForward("backward called before any forward pass was recorded");
    check(loss);
    if (node(loss).value.size() != 1)
        throw BackwardBeforeForward("backward requires a scalar loss node");

    for (Id i = 0; i <= loss; ++i)
        node(i).grad = Tensor::zeros(node(i).value.shape());
    node(loss).grad[0] = 1.0f;

    for (Id i = loss; i >= 0; --i)
        if (node(i).back) node(i).back(*this);
}

} // namespace osids::nn
