#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "osids/error.hpp"
#include "osids/io_util.hpp"
#include "osids/pipeline.hpp"

namespace osids {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw CorruptSection("bundle manifest: bad number for " + what + ": '" + s + "'");
    }
}

struct ArrayEntry {
    std::string dtype; // f32 or f64
    std::size_t offset = 0;
    std::vector<int> shape;

    std::size_t count() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
};

class BundleWriter {
public:
    void add_f32(const std::string& name, const nn::Tensor& t) {
        manifest_ += "array " + name + " f32 " + std::to_string(blob_.size()) + " " +
                     shape_str(t.shape()) + "\n";
        for (int i = 0; i < t.size(); ++i) put_f32(blob_, t[i]);
    }

    void add_f64(const std::string& name, const std::vector<double>& v) {
        manifest_ += "array " + name + " f64 " + std::to_string(blob_.size()) + " 1 " +
                     std::to_string(v.size()) + "\n";
        for (double x : v) put_f64(blob_, x);
    }

    void line(const std::string& s) { manifest_ += s + "\n"; }

    std::string finish() const {
        std::string out = "osids.bundle " + std::to_string(kBundleVersion) + "\n";
        out += manifest_;
        const std::uint32_t crc =
            crc32(reinterpret_cast<const unsigned char*>(blob_.data()), blob_.size());
        char crc_hex[16];
        std::snprintf(crc_hex, sizeof(crc_hex), "%08x", crc);
        out += "blob " + std::to_string(blob_.size()) + " " + crc_hex + "\nend\n";
        out += blob_;
        return out;
    }

private:
    static std::string shape_str(const std::vector<int>& shape) {
        std::string s = std::to_string(shape.size());
        for (int d : shape) s += " " + std::to_string(d);
        return s;
    }

    std::string manifest_;
    std::string blob_;
};

void write_parameter(BundleWriter& w, const nn::Parameter& p) { w.add_f32(p.name, p.value); }

void write_batch_norm(BundleWriter& w, const std::string& name, const nn::BatchNormState& bn) {
    w.line("bn_config " + name + " " + fmt(bn.momentum) + " " + fmt(bn.epsilon));
    write_parameter(w, bn.gamma);
    write_parameter(w, bn.beta);
    w.add_f32(name + ".running_mean", bn.running_mean);
    w.add_f32(name + ".running_var", bn.running_var);
}

class BundleReader {
public:
    explicit BundleReader(const std::string& bytes) {
        std::size_t pos = 0;
        auto read_line = [&]() {
            const std::size_t nl = bytes.find('\n', pos);
            if (nl == std::string::npos)
                throw CorruptSection("bundle manifest not terminated");
            std::string line = bytes.substr(pos, nl - pos);
            pos = nl + 1;
            return line;
        };

        {
            std::istringstream first(read_line());
            std::string magic;
            std::uint32_t version = 0;
            first >> magic >> version;
            if (magic != "osids.bundle")
                throw CorruptSection("not a model bundle (bad magic)");
            if (version != kBundleVersion)
                throw VersionMismatch("bundle version " + std::to_string(version) +
                                      " not supported (expected " +
                                      std::to_string(kBundleVersion) + ")");
        }

        std::size_t blob_size = 0;
        std::string blob_crc;
        for (;;) {
            std::string line = read_line();
            if (line == "end") break;
            std::istringstream ls(line);
            std::string kw;
            ls >> kw;
            if (kw == "array") {
                std::string name;
                ArrayEntry e;
                std::size_t ndim = 0;
                ls >> name >> e.dtype >> e.offset >> ndim;
                for (std::size_t i = 0; i < ndim; ++i) {
                    int d = 0;
                    ls >> d;
                    e.shape.push_back(d);
                }
                if (!ls || (e.dtype != "f32" && e.dtype != "f64"))
                    throw CorruptSection("bundle manifest: bad array line: " + line);
                arrays_[name] = std::move(e);
            } else if (kw == "blob") {
                ls >> blob_size >> blob_crc;
            } else {
                lines_.push_back(line);
            }
        }

        if (bytes.size() - pos != blob_size)
            throw CorruptSection("blob: expected " + std::to_string(blob_size) +
                                 " bytes, file has " + std::to_string(bytes.size() - pos));
        blob_ = bytes.substr(pos);
        char crc_hex[16];
        std::snprintf(crc_hex, sizeof(crc_hex), "%08x",
                      crc32(reinterpret_cast<const unsigned char*>(blob_.data()), blob_.size()));
        if (blob_crc != crc_hex) throw CorruptSection("blob: checksum mismatch");
    }

    nn::Tensor f32(const std::string& name, const std::vector<int>& expected_shape) const {
        const ArrayEntry& e = entry(name, "f32");
        if (e.shape != expected_shape)
            throw CorruptSection(name + ": shape mismatch");
        nn::Tensor t(e.shape);
        const std::size_t bytes = e.count() * 4;
        if (e.offset + bytes > blob_.size())
            throw CorruptSection(name + ": array exceeds blob");
        ByteReader r(reinterpret_cast<const unsigned char*>(blob_.data()) + e.offset, bytes);
        for (int i = 0; i < t.size(); ++i) t[i] = r.f32();
        return t;
    }

    std::vector<double> f64(const std::string& name, std::size_t expected_len) const {
        const ArrayEntry& e = entry(name, "f64");
        if (e.count() != expected_len)
            throw CorruptSection(name + ": length mismatch");
        const std::size_t bytes = e.count() * 8;
        if (e.offset + bytes > blob_.size())
            throw CorruptSection(name + ": array exceeds blob");
        ByteReader r(reinterpret_cast<const unsigned char*>(blob_.data()) + e.offset, bytes);
        std::vector<double> v(expected_len);
        for (auto& x : v) x = r.f64();
        return v;
    }

    const std::vector<std::string>& lines() const { return lines_; }

private:
    const ArrayEntry& entry(const std::string& name, const std::string& dtype) const {
        auto it = arrays_.find(name);
        if (it == arrays_.end()) throw CorruptSection(name + ": array missing from bundle");
        if (it->second.dtype != dtype) throw CorruptSection(name + ": wrong dtype");
        return it->second;
    }

    std::map<std::string, ArrayEntry> arrays_;
    std::vector<std::string> lines_;
    std::string blob_;
};

nn::Parameter read_parameter(const BundleReader& r, const std::string& name,
                             std::vector<int> shape) {
    return nn::Parameter(name, r.f32(name, shape));
}

} // namespace

std::string serialize_bundle(const ModelBundle& bundle) {
    bundle.validate();
    const int n = bundle.n_classes();
    BundleWriter w;

    w.line("class_count " + std::to_string(n));
    for (int c = 0; c < n; ++c) {
        const std::string& name = bundle.classifier.class_names[c];
        if (name.find('\n') != std::string::npos)
            throw Error("class name contains a newline: cannot serialize");
        w.line("class " + std::to_string(c) + " " + name);
    }
    for (int col = 0; col < 4; ++col)
        w.line("norm " + std::to_string(col) + " " + fmt(bundle.norm.mean[col]) + " " +
               fmt(bundle.norm.stddev[col]));
    w.line("encoder_slope " + fmt(bundle.encoder.leaky_slope));
    w.line("openmax_config " + fmt(bundle.openmax_config.attenuation) + " " +
           fmt(bundle.openmax_config.tail_fraction) + " " +
           std::to_string(bundle.openmax_config.tail_floor));
    for (int c = 0; c < n; ++c) {
        const WeibullModel& m = bundle.calibrations[c].rho;
        w.line("weibull " + std::to_string(c) + " " + fmt(m.shift) + " " + fmt(m.shape) + " " +
               fmt(m.scale));
    }
    for (int c = 0; c < n; ++c) {
        const ReconstructionThreshold& t = bundle.thresholds[c];
        w.line("vae_threshold " + std::to_string(c) + " " + fmt(t.threshold) + " " +
               fmt(t.quantile_position));
    }
    for (const auto& [key, value] : bundle.train_echo) w.line("echo " + key + " " + value);

    write_parameter(w, bundle.encoder.conv1_w);
    write_parameter(w, bundle.encoder.conv1_b);
    write_batch_norm(w, "encoder.bn1", bundle.encoder.bn1);
    write_parameter(w, bundle.encoder.conv2_w);
    write_parameter(w, bundle.encoder.conv2_b);
    write_batch_norm(w, "encoder.bn2", bundle.encoder.bn2);
    write_parameter(w, bundle.classifier.weight);
    write_parameter(w, bundle.classifier.bias);
    for (int c = 0; c < n; ++c)
        w.add_f64("openmax.mav." + std::to_string(c), bundle.calibrations[c].mav);
    for (int c = 0; c < n; ++c)
        for (const nn::Parameter* p : bundle.vaes[c].parameters()) write_parameter(w, *p);

    return w.finish();
}

ModelBundle deserialize_bundle(const std::string& bytes) {
    BundleReader r(bytes);

    ModelBundle bundle;
    int class_count = -1;
    std::map<int, std::string> class_names;
    std::map<std::string, std::pair<double, double>> bn_configs;
    bool have_norm[4] = {false, false, false, false};
    bool have_openmax = false;
    std::map<int, WeibullModel> weibulls;
    std::map<int, ReconstructionThreshold> thresholds;

    for (const std::string& line : r.lines()) {
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "class_count") {
            ls >> class_count;
        } else if (kw == "class") {
            int idx = -1;
            ls >> idx;
            std::string name;
            std::getline(ls, name);
            if (!name.empty() && name.front() == ' ') name.erase(0, 1);
            if (idx < 0 || name.empty())
                throw CorruptSection("bundle manifest: bad class line: " + line);
            class_names[idx] = name;
        } else if (kw == "norm") {
            int col = -1;
            std::string mean, stddev;
            ls >> col >> mean >> stddev;
            if (col < 0 || col > 3)
                throw CorruptSection("bundle manifest: bad norm column");
            bundle.norm.mean[col] = parse_double(mean, "norm mean");
            bundle.norm.stddev[col] = parse_double(stddev, "norm stddev");
            have_norm[col] = true;
        } else if (kw == "encoder_slope") {
            std::string v;
            ls >> v;
            bundle.encoder.leaky_slope = parse_double(v, "encoder_slope");
        } else if (kw == "bn_config") {
            std::string name, mom, eps;
            ls >> name >> mom >> eps;
            bn_configs[name] = {parse_double(mom, "bn momentum"), parse_double(eps, "bn epsilon")};
        } else if (kw == "openmax_config") {
            std::string att, frac;
            int floor = 0;
            ls >> att >> frac >> floor;
            bundle.openmax_config.attenuation = parse_double(att, "attenuation");
            bundle.openmax_config.tail_fraction = parse_double(frac, "tail_fraction");
            bundle.openmax_config.tail_floor = floor;
            have_openmax = true;
        } else if (kw == "weibull") {
            int c = -1;
            std::string shift, shape, scale;
            ls >> c >> shift >> shape >> scale;
            WeibullModel m;
            m.shift = parse_double(shift, "weibull shift");
            m.shape = parse_double(shape, "weibull shape");
            m.scale = parse_double(scale, "weibull scale");
            weibulls[c] = m;
        } else if (kw == "vae_threshold") {
            int c = -1;
            std::string thr, pos;
            ls >> c >> thr >> pos;
            ReconstructionThreshold t;
            t.class_index = c;
            t.threshold = parse_double(thr, "vae threshold");
            t.quantile_position = parse_double(pos, "threshold position");
            thresholds[c] = t;
        } else if (kw == "echo") {
            std::string key, value;
            ls >> key;
            std::getline(ls, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            bundle.train_echo.emplace_back(key, value);
        }
        // unknown keywords are ignored for forward compatibility
    }

    if (class_count < 2 || static_cast<int>(class_names.size()) != class_count)
        throw CorruptSection("bundle manifest: class list incomplete");
    for (int c = 0; c < class_count; ++c) {
        auto it = class_names.find(c);
        if (it == class_names.end())
            throw CorruptSection("bundle manifest: missing class index " + std::to_string(c));
        bundle.classifier.class_names.push_back(it->second);
    }
    for (int col = 0; col < 4; ++col)
        if (!have_norm[col]) throw CorruptSection("bundle manifest: norm stats incomplete");
    if (!have_openmax) throw CorruptSection("bundle manifest: openmax_config missing");

    auto read_batch_norm = [&](const std::string& name) {
        nn::BatchNormState bn;
        bn.gamma = read_parameter(r, name + ".gamma", {1});
        bn.beta = read_parameter(r, name + ".beta", {1});
        bn.running_mean = r.f32(name + ".running_mean", {1});
        bn.running_var = r.f32(name + ".running_var", {1});
        auto it = bn_configs.find(name);
        if (it == bn_configs.end())
            throw CorruptSection(name + ": bn_config line missing");
        bn.momentum = it->second.first;
        bn.epsilon = it->second.second;
        return bn;
    };

    bundle.encoder.conv1_w = read_parameter(r, "encoder.conv1.weight", {1, 1, 4});
    bundle.encoder.conv1_b = read_parameter(r, "encoder.conv1.bias", {1});
    bundle.encoder.bn1 = read_batch_norm("encoder.bn1");
    bundle.encoder.conv2_w = read_parameter(r, "encoder.conv2.weight", {1, 1, 3});
    bundle.encoder.conv2_b = read_parameter(r, "encoder.conv2.bias", {1});
    bundle.encoder.bn2 = read_batch_norm("encoder.bn2");
    bundle.classifier.weight =
        read_parameter(r, "classifier.weight", {class_count, kFlatFeatureDim});
    bundle.classifier.bias = read_parameter(r, "classifier.bias", {class_count});

    for (int c = 0; c < class_count; ++c) {
        ClassCalibration cal;
        cal.class_index = c;
        cal.mav = r.f64("openmax.mav." + std::to_string(c),
                        static_cast<std::size_t>(class_count));
        auto it = weibulls.find(c);
        if (it == weibulls.end())
            throw BundleClassMismatch("no Weibull model for class index " + std::to_string(c));
        cal.rho = it->second;
        bundle.calibrations.push_back(std::move(cal));
    }

    for (int c = 0; c < class_count; ++c) {
        const std::string prefix = "vae." + std::to_string(c) + ".";
        VaeParams v;
        v.class_index = c;
        try {
            v.enc1_w = read_parameter(r, prefix + "enc1.weight", {264, kFlatFeatureDim});
            v.enc1_b = read_parameter(r, prefix + "enc1.bias", {264});
            v.enc2_w = read_parameter(r, prefix + "enc2.weight", {132, 264});
            v.enc2_b = read_parameter(r, prefix + "enc2.bias", {132});
            v.enc3_w = read_parameter(r, prefix + "enc3.weight", {kLatentEncOut, 132});
            v.enc3_b = read_parameter(r, prefix + "enc3.bias", {kLatentEncOut});
            v.dec1_w = read_parameter(r, prefix + "dec1.weight", {66, kLatentDim});
            v.dec1_b = read_parameter(r, prefix + "dec1.bias", {66});
            v.dec2_w = read_parameter(r, prefix + "dec2.weight", {132, 66});
            v.dec2_b = read_parameter(r, prefix + "dec2.bias", {132});
            v.dec3_w = read_parameter(r, prefix + "dec3.weight", {264, 132});
            v.dec3_b = read_parameter(r, prefix + "dec3.bias", {264});
            v.dec4_w = read_parameter(r, prefix + "dec4.weight", {kFlatFeatureDim, 264});
            v.dec4_b = read_parameter(r, prefix + "dec4.bias", {kFlatFeatureDim});
        } catch (const CorruptSection&) {
            throw BundleClassMismatch("VAE parameters incomplete for class index " +
                                      std::to_string(c));
        }
        bundle.vaes.push_back(std::move(v));

        auto it = thresholds.find(c);
        if (it == thresholds.end())
            throw BundleClassMismatch("no reconstruction threshold for class index " +
                                      std::to_string(c));
        bundle.thresholds.push_back(it->second);
    }

    bundle.validate();
    return bundle;
}

void save_bundle_file(const std::string& path, const ModelBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    const std::string bytes = serialize_bundle(bundle);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path);
}

ModelBundle load_bundle_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    return deserialize_bundle(read_stream(in));
}

} // namespace osids
