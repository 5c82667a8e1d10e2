#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mrms/common.hpp"
#include "mrms/ops.hpp"
#include "mrms/tensor.hpp"
#include "mrms/weights_io.hpp"

namespace mrms {

// ---------------------------------------------------------------------------
// Layers

namespace layers {

inline double glorot_limit(int fan_in, int fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

struct Conv1dLayer {
    Tensor weight;  // Cout x Cin x k
    Tensor bias;    // Cout

    Conv1dLayer() = default;
    Conv1dLayer(int in_ch, int out_ch, int k, Rng& rng) {
        const double lim = glorot_limit(in_ch * k, out_ch * k);
        std::vector<double> w(static_cast<std::size_t>(out_ch) * in_ch * k);
        for (auto& v : w) v = rng.uniform(-lim, lim);
        weight = Tensor::from_data({out_ch, in_ch, k}, std::move(w), true);
        bias = Tensor::zeros({out_ch}, true);
    }

    Tensor operator()(const Tensor& x) const { return conv1d(x, weight, bias); }
};

struct DenseLayer {
    Tensor weight;  // G x F
    Tensor bias;    // G

    DenseLayer() = default;
    DenseLayer(int in_f, int out_f, Rng& rng) {
        const double lim = glorot_limit(in_f, out_f);
        std::vector<double> w(static_cast<std::size_t>(out_f) * in_f);
        for (auto& v : w) v = rng.uniform(-lim, lim);
        weight = Tensor::from_data({out_f, in_f}, std::move(w), true);
        bias = Tensor::zeros({out_f}, true);
    }

    Tensor operator()(const Tensor& x) const { return dense(x, weight, bias); }
};

}  // namespace layers

// ---------------------------------------------------------------------------
// Configs

struct MrmsConfig {
    std::vector<int> kernel_sizes{3, 5, 7};
    int branch_filters = 32;
    std::vector<int> fusion_channels{128, 128};
    double dropout_rate = 0.3;
    int num_classes = 2;

    void validate() const {
        require(!kernel_sizes.empty(), "MrmsConfig: kernel_sizes empty");
        for (std::size_t i = 0; i < kernel_sizes.size(); ++i) {
            require(kernel_sizes[i] % 2 == 1, "MrmsConfig: kernel sizes must be odd");
            if (i > 0)
                require(kernel_sizes[i] > kernel_sizes[i - 1],
                        "MrmsConfig: kernel sizes must be ascending");
        }
        require(branch_filters >= 1, "MrmsConfig: branch_filters must be >= 1");
        require(fusion_channels.size() == 2, "MrmsConfig: fusion_channels must have 2 entries");
        require(fusion_channels[0] >= 1 && fusion_channels[1] >= 1,
                "MrmsConfig: fusion channels must be >= 1");
        require(dropout_rate >= 0.0 && dropout_rate < 1.0, "MrmsConfig: dropout_rate in [0,1)");
        require(num_classes >= 2, "MrmsConfig: num_classes must be >= 2");
    }
};

struct LmrmsConfig {
    std::vector<int> kernel_sizes{3, 5};
    // 16 filters per branch is the published width; smaller values are
    // accepted so reduced-width configs can be gradient-checked.
    int branch_filters = 16;
    int hidden_units = 64;
    std::vector<int> main_channels{64, 128};
    double dropout_rate = 0.3;
    double tau = 0.8;  // meaningful range (0, 1]; 0 and >1 force-exit/bypass for testing
    int num_classes = 2;
    bool gate_batch_mean = false;  // gate on the batch-mean confidence instead of per-sample

    void validate() const {
        require(kernel_sizes.size() == 2, "LmrmsConfig: exactly two branch kernel sizes");
        require(kernel_sizes[0] % 2 == 1 && kernel_sizes[1] % 2 == 1,
                "LmrmsConfig: kernel sizes must be odd");
        require(kernel_sizes[0] < kernel_sizes[1], "LmrmsConfig: kernel sizes must be ascending");
        require(branch_filters >= 1, "LmrmsConfig: branch_filters must be >= 1");
        require(hidden_units >= 1, "LmrmsConfig: hidden_units must be >= 1");
        require(main_channels.size() == 2, "LmrmsConfig: main_channels must have 2 entries");
        require(dropout_rate >= 0.0 && dropout_rate < 1.0, "LmrmsConfig: dropout_rate in [0,1)");
        require(tau >= 0.0, "LmrmsConfig: tau must be non-negative");
        require(num_classes >= 2, "LmrmsConfig: num_classes must be >= 2");
    }
};

// ---------------------------------------------------------------------------
// Inference result

struct InferenceOutcome {
    int batch = 0;
    int num_classes = 0;
    std::vector<double> logits;        // B x C, row-major
    std::vector<uint8_t> exited_early; // per sample
    std::vector<double> confidence;    // per sample, max softmax probability
};

// ---------------------------------------------------------------------------
// Network interface

class Network {
public:
    virtual ~Network() = default;

    virtual std::string kind() const = 0;
    virtual int input_channels() const = 0;
    virtual int num_classes() const = 0;

    // Logits for a B x R x L batch. For LMRMS this is the main pathway; the
    // early head never contributes to training gradients.
    virtual Tensor forward(const Tensor& batch, Mode mode, Rng& rng) = 0;

    // Early-exit aware inference (plain values, no graph).
    virtual InferenceOutcome infer(const Tensor& batch) = 0;

    // All trainable parameters (named, stable order).
    virtual std::vector<NamedParam> parameters() = 0;
    // Parameters updated in the main training phase.
    virtual std::vector<NamedParam> main_parameters() { return parameters(); }
    // Parameters of a post-hoc head phase, if the architecture has one.
    virtual std::vector<NamedParam> head_parameters() { return {}; }
    // Loss for the post-hoc head phase; the trunk is frozen (detached).
    virtual Tensor head_loss(const Tensor&, const std::vector<int>&) {
        throw std::logic_error("model has no post-hoc head");
    }

    // Non-trainable state that must round-trip with the weights (BN running
    // statistics).
    virtual std::vector<NamedParam> buffers() { return {}; }

    std::size_t param_count() {
        std::size_t n = 0;
        for (const auto& p : parameters()) n += p.tensor.size();
        return n;
    }

    std::vector<NamedParam> state() {
        auto all = parameters();
        for (auto& b : buffers()) all.push_back(b);
        return all;
    }

    std::vector<std::vector<double>> snapshot_state() {
        std::vector<std::vector<double>> snap;
        for (auto& p : state()) snap.push_back(p.tensor.data());
        return snap;
    }

    void restore_state(const std::vector<std::vector<double>>& snap) {
        auto st = state();
        require(snap.size() == st.size(), "restore_state: snapshot size mismatch");
        for (std::size_t i = 0; i < st.size(); ++i) st[i].tensor.data() = snap[i];
    }

    void save(const std::string& path) { save_weights(path, state()); }
    void load(const std::string& path) {
        auto st = state();
        load_weights(path, st);
    }
};

// ---------------------------------------------------------------------------
// MRMS-Net: parallel multi-scale branches, hierarchical fusion, GAP head.

class MrmsNet : public Network {
public:
    MrmsNet(int in_channels, MrmsConfig cfg, uint64_t seed)
        : cfg_(std::move(cfg)), in_channels_(in_channels) {
        cfg_.validate();
        require(in_channels >= 1, "MrmsNet: need at least one input channel");
        Rng rng(seed);
        for (int k : cfg_.kernel_sizes)
            branches_.emplace_back(in_channels, cfg_.branch_filters, k, rng);
        const int concat_ch = cfg_.branch_filters * static_cast<int>(cfg_.kernel_sizes.size());
        bn_.reset(concat_ch);
        fuse1_ = layers::Conv1dLayer(concat_ch, cfg_.fusion_channels[0], 3, rng);
        fuse2_ = layers::Conv1dLayer(cfg_.fusion_channels[0], cfg_.fusion_channels[1], 3, rng);
        head_ = layers::DenseLayer(cfg_.fusion_channels[1], cfg_.num_classes, rng);
    }

    std::string kind() const override { return "mrms"; }
    int input_channels() const override { return in_channels_; }
    int num_classes() const override { return cfg_.num_classes; }
    const MrmsConfig& config() const { return cfg_; }

    Tensor forward(const Tensor& batch, Mode mode, Rng& rng) override {
        check_input(batch);
        std::vector<Tensor> outs;
        outs.reserve(branches_.size());
        for (const auto& b : branches_) outs.push_back(relu(b(batch)));
        Tensor x = concat_channels(outs);
        x = batch_norm(x, bn_, mode);
        x = relu(x);
        x = relu(fuse1_(x));
        x = fuse2_(x);
        x = dropout(x, cfg_.dropout_rate, mode, rng);
        x = global_avg_pool(x);
        return head_(x);
    }

    InferenceOutcome infer(const Tensor& batch) override {
        Rng unused(0);
        Tensor logits = forward(batch, Mode::Infer, unused);
        const int B = logits.dim(0), C = logits.dim(1);
        InferenceOutcome out;
        out.batch = B;
        out.num_classes = C;
        out.logits = logits.data();
        out.exited_early.assign(B, 0);
        auto probs = softmax_rows(out.logits, B, C);
        out.confidence.resize(B);
        for (int b = 0; b < B; ++b) {
            double mx = 0.0;
            for (int c = 0; c < C; ++c) mx = std::max(mx, probs[static_cast<std::size_t>(b) * C + c]);
            out.confidence[b] = mx;
        }
        return out;
    }

    std::vector<NamedParam> parameters() override {
        std::vector<NamedParam> ps;
        for (std::size_t i = 0; i < branches_.size(); ++i) {
            const std::string base = "branch" + std::to_string(i);
            ps.push_back({base + ".weight", branches_[i].weight});
            ps.push_back({base + ".bias", branches_[i].bias});
        }
        ps.push_back({"bn.gamma", bn_.gamma});
        ps.push_back({"bn.beta", bn_.beta});
        ps.push_back({"fuse1.weight", fuse1_.weight});
        ps.push_back({"fuse1.bias", fuse1_.bias});
        ps.push_back({"fuse2.weight", fuse2_.weight});
        ps.push_back({"fuse2.bias", fuse2_.bias});
        ps.push_back({"head.weight", head_.weight});
        ps.push_back({"head.bias", head_.bias});
        return ps;
    }

    std::vector<NamedParam> buffers() override {
        return {{"bn.running_mean", bn_.running_mean}, {"bn.running_var", bn_.running_var}};
    }

private:
    void check_input(const Tensor& batch) const {
        require(batch.ndim() == 3, "MrmsNet: batch must be B x R x L");
        detail::check_dim(batch.dim(1), in_channels_, "MrmsNet: representation channels");
        require(batch.dim(2) >= cfg_.kernel_sizes.back(),
                "MrmsNet: series length " + std::to_string(batch.dim(2)) +
                    " shorter than largest kernel " + std::to_string(cfg_.kernel_sizes.back()));
    }

    MrmsConfig cfg_;
    int in_channels_;
    std::vector<layers::Conv1dLayer> branches_;
    BatchNorm1d bn_;
    layers::Conv1dLayer fuse1_, fuse2_;
    layers::DenseLayer head_;
};

// ---------------------------------------------------------------------------
// LMRMS-Net: two light branches, confidence-gated early exit, main fallback.

class LmrmsNet : public Network {
public:
    LmrmsNet(int in_channels, LmrmsConfig cfg, uint64_t seed)
        : cfg_(std::move(cfg)), in_channels_(in_channels) {
        cfg_.validate();
        require(in_channels >= 1, "LmrmsNet: need at least one input channel");
        Rng rng(seed);
        branch3_ = layers::Conv1dLayer(in_channels, cfg_.branch_filters, cfg_.kernel_sizes[0], rng);
        branch5_ = layers::Conv1dLayer(in_channels, cfg_.branch_filters, cfg_.kernel_sizes[1], rng);
        const int concat_ch = 2 * cfg_.branch_filters;
        bn_.reset(concat_ch);
        main1_ = layers::Conv1dLayer(concat_ch, cfg_.main_channels[0], 3, rng);
        main2_ = layers::Conv1dLayer(cfg_.main_channels[0], cfg_.main_channels[1], 3, rng);
        classifier_ = layers::DenseLayer(cfg_.main_channels[1], cfg_.num_classes, rng);
        early_fc1_ = layers::DenseLayer(concat_ch, cfg_.hidden_units, rng);
        early_fc2_ = layers::DenseLayer(cfg_.hidden_units, cfg_.num_classes, rng);
    }

    std::string kind() const override { return "lmrms"; }
    int input_channels() const override { return in_channels_; }
    int num_classes() const override { return cfg_.num_classes; }
    const LmrmsConfig& config() const { return cfg_; }
    double tau() const { return cfg_.tau; }
    void set_tau(double tau) {
        require(tau >= 0.0, "tau must be non-negative");
        cfg_.tau = tau;
    }

    // Main pathway only; the early head is not on the training path.
    Tensor forward(const Tensor& batch, Mode mode, Rng& rng) override {
        return main_logits(trunk(batch), mode, rng);
    }

    // Early-head logits on a detached trunk; used both by inference and by
    // the post-hoc head training phase.
    Tensor early_logits(const Tensor& concat_features) {
        Tensor pooled = global_avg_pool(concat_features);
        return early_fc2_(relu(early_fc1_(pooled)));
    }

    InferenceOutcome infer(const Tensor& batch) override {
        Tensor concat = trunk(batch);
        Tensor early = early_logits(concat);
        const int B = early.dim(0), C = early.dim(1);
        auto early_probs = softmax_rows(early.data(), B, C);

        InferenceOutcome out;
        out.batch = B;
        out.num_classes = C;
        out.confidence.resize(B);
        out.exited_early.assign(B, 0);
        for (int b = 0; b < B; ++b) {
            double mx = 0.0;
            for (int c = 0; c < C; ++c)
                mx = std::max(mx, early_probs[static_cast<std::size_t>(b) * C + c]);
            out.confidence[b] = mx;
        }
        if (cfg_.gate_batch_mean) {
            double mean_conf = 0.0;
            for (double c : out.confidence) mean_conf += c;
            mean_conf /= B;
            if (mean_conf >= cfg_.tau) out.exited_early.assign(B, 1);
        } else {
            for (int b = 0; b < B; ++b)
                if (out.confidence[b] >= cfg_.tau) out.exited_early[b] = 1;
        }

        bool need_main = false;
        for (uint8_t e : out.exited_early) need_main = need_main || !e;
        out.logits.assign(static_cast<std::size_t>(B) * C, 0.0);
        std::vector<double> main_vals;
        if (need_main) {
            Rng unused(0);
            main_vals = main_logits(concat, Mode::Infer, unused).data();
        }
        for (int b = 0; b < B; ++b) {
            const double* src = out.exited_early[b]
                                    ? early.data().data() + static_cast<std::size_t>(b) * C
                                    : main_vals.data() + static_cast<std::size_t>(b) * C;
            std::copy(src, src + C, out.logits.begin() + static_cast<std::size_t>(b) * C);
        }
        return out;
    }

    std::vector<NamedParam> parameters() override {
        auto ps = main_parameters();
        for (auto& p : head_parameters()) ps.push_back(p);
        return ps;
    }

    std::vector<NamedParam> main_parameters() override {
        std::vector<NamedParam> ps;
        ps.push_back({"branch3.weight", branch3_.weight});
        ps.push_back({"branch3.bias", branch3_.bias});
        ps.push_back({"branch5.weight", branch5_.weight});
        ps.push_back({"branch5.bias", branch5_.bias});
        ps.push_back({"bn.gamma", bn_.gamma});
        ps.push_back({"bn.beta", bn_.beta});
        ps.push_back({"main1.weight", main1_.weight});
        ps.push_back({"main1.bias", main1_.bias});
        ps.push_back({"main2.weight", main2_.weight});
        ps.push_back({"main2.bias", main2_.bias});
        ps.push_back({"classifier.weight", classifier_.weight});
        ps.push_back({"classifier.bias", classifier_.bias});
        return ps;
    }

    std::vector<NamedParam> head_parameters() override {
        std::vector<NamedParam> ps;
        ps.push_back({"early_fc1.weight", early_fc1_.weight});
        ps.push_back({"early_fc1.bias", early_fc1_.bias});
        ps.push_back({"early_fc2.weight", early_fc2_.weight});
        ps.push_back({"early_fc2.bias", early_fc2_.bias});
        return ps;
    }

    // Cross-entropy of the early head on frozen trunk features.
    Tensor head_loss(const Tensor& batch, const std::vector<int>& labels) override {
        Tensor concat = trunk(batch).detach();
        return softmax_cross_entropy(early_logits(concat), labels);
    }

    std::vector<NamedParam> buffers() override {
        return {{"bn.running_mean", bn_.running_mean}, {"bn.running_var", bn_.running_var}};
    }

private:
    // Branch convs carry a ReLU like the larger model's: with per-channel
    // z-normalized inputs a purely linear branch pools to a near-constant
    // (channel means are exactly zero), leaving the early head no signal.
    Tensor trunk(const Tensor& batch) {
        check_input(batch);
        return concat_channels({relu(branch3_(batch)), relu(branch5_(batch))});
    }

    Tensor main_logits(const Tensor& concat, Mode mode, Rng& rng) {
        Tensor x = batch_norm(concat, bn_, mode);
        x = relu(x);
        x = relu(main1_(x));
        x = main2_(x);
        x = dropout(x, cfg_.dropout_rate, mode, rng);
        x = global_avg_pool(x);
        return classifier_(x);
    }

    void check_input(const Tensor& batch) const {
        require(batch.ndim() == 3, "LmrmsNet: batch must be B x R x L");
        detail::check_dim(batch.dim(1), in_channels_, "LmrmsNet: representation channels");
        require(batch.dim(2) >= cfg_.kernel_sizes.back(),
                "LmrmsNet: series length " + std::to_string(batch.dim(2)) +
                    " shorter than largest kernel " + std::to_string(cfg_.kernel_sizes.back()));
    }

    LmrmsConfig cfg_;
    int in_channels_;
    layers::Conv1dLayer branch3_, branch5_;
    BatchNorm1d bn_;
    layers::Conv1dLayer main1_, main2_;
    layers::DenseLayer classifier_;
    layers::DenseLayer early_fc1_, early_fc2_;
};

// ---------------------------------------------------------------------------
// Flat key/value config serialization

namespace config_io {

inline std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

inline std::map<std::string, std::string> read_kv(const std::string& path) {
    std::ifstream in(path);
    require_data(in.good(), "config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        require_data(eq != std::string::npos, "config: malformed line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

inline const std::string& fetch(const std::map<std::string, std::string>& kv,
                                const std::string& key) {
    auto it = kv.find(key);
    require_data(it != kv.end(), "config: missing key '" + key + "'");
    return it->second;
}

}  // namespace config_io

inline void save_config(const std::string& path, const MrmsConfig& cfg, int in_channels) {
    std::ofstream out(path);
    require_data(out.good(), "config: cannot open " + path + " for writing");
    out << "model=mrms\n"
        << "in_channels=" << in_channels << "\n"
        << "kernel_sizes=" << config_io::join_ints(cfg.kernel_sizes) << "\n"
        << "branch_filters=" << cfg.branch_filters << "\n"
        << "fusion_channels=" << config_io::join_ints(cfg.fusion_channels) << "\n"
        << "dropout_rate=" << format_double(cfg.dropout_rate) << "\n"
        << "num_classes=" << cfg.num_classes << "\n";
}

inline void save_config(const std::string& path, const LmrmsConfig& cfg, int in_channels) {
    std::ofstream out(path);
    require_data(out.good(), "config: cannot open " + path + " for writing");
    out << "model=lmrms\n"
        << "in_channels=" << in_channels << "\n"
        << "kernel_sizes=" << config_io::join_ints(cfg.kernel_sizes) << "\n"
        << "branch_filters=" << cfg.branch_filters << "\n"
        << "hidden_units=" << cfg.hidden_units << "\n"
        << "main_channels=" << config_io::join_ints(cfg.main_channels) << "\n"
        << "dropout_rate=" << format_double(cfg.dropout_rate) << "\n"
        << "tau=" << format_double(cfg.tau) << "\n"
        << "num_classes=" << cfg.num_classes << "\n";
}

// Rebuilds a model (fresh Glorot init, seed 0) from a saved config; weights
// are loaded separately through Network::load.
inline std::unique_ptr<Network> load_model_config(const std::string& path) {
    auto kv = config_io::read_kv(path);
    const std::string& model = config_io::fetch(kv, "model");
    const int in_channels = std::stoi(config_io::fetch(kv, "in_channels"));
    if (model == "mrms") {
        MrmsConfig cfg;
        cfg.kernel_sizes = config_io::split_ints(config_io::fetch(kv, "kernel_sizes"));
        cfg.branch_filters = std::stoi(config_io::fetch(kv, "branch_filters"));
        cfg.fusion_channels = config_io::split_ints(config_io::fetch(kv, "fusion_channels"));
        cfg.dropout_rate = std::stod(config_io::fetch(kv, "dropout_rate"));
        cfg.num_classes = std::stoi(config_io::fetch(kv, "num_classes"));
        return std::make_unique<MrmsNet>(in_channels, cfg, 0);
    }
    if (model == "lmrms") {
        LmrmsConfig cfg;
        cfg.kernel_sizes = config_io::split_ints(config_io::fetch(kv, "kernel_sizes"));
        cfg.branch_filters = std::stoi(config_io::fetch(kv, "branch_filters"));
        cfg.hidden_units = std::stoi(config_io::fetch(kv, "hidden_units"));
        cfg.main_channels = config_io::split_ints(config_io::fetch(kv, "main_channels"));
        cfg.dropout_rate = std::stod(config_io::fetch(kv, "dropout_rate"));
        cfg.tau = std::stod(config_io::fetch(kv, "tau"));
        cfg.num_classes = std::stoi(config_io::fetch(kv, "num_classes"));
        return std::make_unique<LmrmsNet>(in_channels, cfg, 0);
    }
    throw DataError("config: unknown model '" + model + "'");
}

}  // namespace mrms
