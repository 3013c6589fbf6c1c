#include "agidet/autoenc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace agidet::autoenc {

namespace {

void check_dims(const std::vector<std::vector<double>>& data) {
    for (const auto& v : data)
        if (v.size() != static_cast<std::size_t>(kInputDim))
            throw DataError("autoencoder: expected " + std::to_string(kInputDim) +
                            "-dim vectors");
}

void standardize(const AutoencoderModel& m, std::span<const double> x, double* z) {
    for (int j = 0; j < kInputDim; ++j)
        z[j] = (x[static_cast<std::size_t>(j)] - m.feature_mean[static_cast<std::size_t>(j)]) /
               m.feature_std[static_cast<std::size_t>(j)];
}

// z (67) -> h (64) -> y (67)
void forward(const AutoencoderModel& m, const double* z, double* h, double* y) {
    for (int i = 0; i < kHiddenDim; ++i) {
        double acc = m.enc_b[static_cast<std::size_t>(i)];
        const double* row = &m.enc_w[static_cast<std::size_t>(i) * kInputDim];
        for (int j = 0; j < kInputDim; ++j) acc += row[j] * z[j];
        h[i] = m.activation == Activation::Tanh ? std::tanh(acc) : acc;
    }
    for (int j = 0; j < kInputDim; ++j) {
        double acc = m.dec_b[static_cast<std::size_t>(j)];
        const double* row = &m.dec_w[static_cast<std::size_t>(j) * kHiddenDim];
        for (int i = 0; i < kHiddenDim; ++i) acc += row[i] * h[i];
        y[j] = acc;
    }
}

}  // namespace

AutoencoderModel train_autoencoder(const std::vector<std::vector<double>>& normals,
                                   const AeTrainConfig& config) {
    if (normals.size() < static_cast<std::size_t>(kHiddenDim))
        throw DataError("train_autoencoder: need at least " + std::to_string(kHiddenDim) +
                        " training vectors, got " + std::to_string(normals.size()));
    if (config.epochs < 1) throw DataError("train_autoencoder: epochs must be >= 1");
    if (!(config.learning_rate > 0))
        throw DataError("train_autoencoder: learning_rate must be > 0");
    check_dims(normals);

    const std::size_t n = normals.size();
    AutoencoderModel m;
    m.activation = config.activation;
    m.feature_mean.assign(kInputDim, 0.0);
    m.feature_std.assign(kInputDim, 0.0);
    for (const auto& v : normals)
        for (int j = 0; j < kInputDim; ++j)
            m.feature_mean[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(j)];
    for (int j = 0; j < kInputDim; ++j)
        m.feature_mean[static_cast<std::size_t>(j)] /= static_cast<double>(n);
    for (const auto& v : normals)
        for (int j = 0; j < kInputDim; ++j) {
            const double d =
                v[static_cast<std::size_t>(j)] - m.feature_mean[static_cast<std::size_t>(j)];
            m.feature_std[static_cast<std::size_t>(j)] += d * d;
        }
    for (int j = 0; j < kInputDim; ++j) {
        double s = std::sqrt(m.feature_std[static_cast<std::size_t>(j)] /
                             static_cast<double>(n));
        m.feature_std[static_cast<std::size_t>(j)] = s < 1e-9 ? 1.0 : s;
    }

    // Standardize once.
    std::vector<double> z(n * kInputDim);
    for (std::size_t r = 0; r < n; ++r)
        standardize(m, normals[r], &z[r * kInputDim]);

    Rng rng(derive_seed(config.seed, 0xae));
    const double init = std::sqrt(6.0 / (kInputDim + kHiddenDim));
    m.enc_w.resize(static_cast<std::size_t>(kHiddenDim) * kInputDim);
    m.dec_w.resize(static_cast<std::size_t>(kInputDim) * kHiddenDim);
    for (auto& w : m.enc_w) w = rng.uniform(-init, init);
    for (auto& w : m.dec_w) w = rng.uniform(-init, init);
    m.enc_b.assign(kHiddenDim, 0.0);
    m.dec_b.assign(kInputDim, 0.0);

    const std::size_t batch =
        config.batch_size <= 0 ? n : std::min<std::size_t>(n, static_cast<std::size_t>(config.batch_size));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> h(kHiddenDim), y(kInputDim), dy(kInputDim), dh(kHiddenDim);
    std::vector<double> g_enc_w(m.enc_w.size()), g_dec_w(m.dec_w.size());
    std::vector<double> g_enc_b(kHiddenDim), g_dec_b(kInputDim);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < n) rng.shuffle(order);
        double epoch_sse = 0.0;
        for (std::size_t begin = 0; begin < n; begin += batch) {
            const std::size_t end = std::min(n, begin + batch);
            const double bsz = static_cast<double>(end - begin);
            std::fill(g_enc_w.begin(), g_enc_w.end(), 0.0);
            std::fill(g_dec_w.begin(), g_dec_w.end(), 0.0);
            std::fill(g_enc_b.begin(), g_enc_b.end(), 0.0);
            std::fill(g_dec_b.begin(), g_dec_b.end(), 0.0);

            for (std::size_t r = begin; r < end; ++r) {
                const double* zr = &z[order[r] * kInputDim];
                forward(m, zr, h.data(), y.data());
                for (int j = 0; j < kInputDim; ++j) {
                    const double e = y[static_cast<std::size_t>(j)] - zr[j];
                    epoch_sse += e * e;
                    dy[static_cast<std::size_t>(j)] = 2.0 * e / (bsz * kInputDim);
                }
                for (int i = 0; i < kHiddenDim; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < kInputDim; ++j)
                        acc += m.dec_w[static_cast<std::size_t>(j) * kHiddenDim +
                                       static_cast<std::size_t>(i)] *
                               dy[static_cast<std::size_t>(j)];
                    if (m.activation == Activation::Tanh)
                        acc *= 1.0 - h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
                    dh[static_cast<std::size_t>(i)] = acc;
                }
                for (int j = 0; j < kInputDim; ++j) {
                    const double d = dy[static_cast<std::size_t>(j)];
                    double* row = &g_dec_w[static_cast<std::size_t>(j) * kHiddenDim];
                    for (int i = 0; i < kHiddenDim; ++i)
                        row[i] += d * h[static_cast<std::size_t>(i)];
                    g_dec_b[static_cast<std::size_t>(j)] += d;
                }
                for (int i = 0; i < kHiddenDim; ++i) {
                    const double d = dh[static_cast<std::size_t>(i)];
                    double* row = &g_enc_w[static_cast<std::size_t>(i) * kInputDim];
                    for (int j = 0; j < kInputDim; ++j) row[j] += d * zr[j];
                    g_enc_b[static_cast<std::size_t>(i)] += d;
                }
            }

            for (std::size_t i = 0; i < m.enc_w.size(); ++i)
                m.enc_w[i] -= config.learning_rate * g_enc_w[i];
            for (std::size_t i = 0; i < m.dec_w.size(); ++i)
                m.dec_w[i] -= config.learning_rate * g_dec_w[i];
            for (int i = 0; i < kHiddenDim; ++i)
                m.enc_b[static_cast<std::size_t>(i)] -=
                    config.learning_rate * g_enc_b[static_cast<std::size_t>(i)];
            for (int j = 0; j < kInputDim; ++j)
                m.dec_b[static_cast<std::size_t>(j)] -=
                    config.learning_rate * g_dec_b[static_cast<std::size_t>(j)];
        }
        const double mse = epoch_sse / (static_cast<double>(n) * kInputDim);
        if (!std::isfinite(mse))
            throw NumericError("train_autoencoder: loss diverged at epoch " +
                               std::to_string(epoch + 1));
        if (epoch == 0) m.first_epoch_mse = mse;
        m.final_epoch_mse = mse;
    }
    return m;
}

double reconstruction_score(const AutoencoderModel& model, std::span<const double> instance) {
    if (instance.size() != static_cast<std::size_t>(kInputDim))
        throw DataError("reconstruction_score: expected " + std::to_string(kInputDim) +
                        "-dim instance");
    std::vector<double> z(kInputDim), h(kHiddenDim), y(kInputDim);
    standardize(model, instance, z.data());
    forward(model, z.data(), h.data(), y.data());
    double acc = 0.0;
    for (int j = 0; j < kInputDim; ++j)
        acc += std::abs(y[static_cast<std::size_t>(j)] - z[static_cast<std::size_t>(j)]);
    return acc / kInputDim;
}

void save_model(const AutoencoderModel& m, const std::string& path) {
    std::ostringstream ss;
    ss << "schema agidet.autoencoder.v1\n";
    ss << "input_dim " << kInputDim << "\n";
    ss << "hidden_dim " << kHiddenDim << "\n";
    ss << "activation " << (m.activation == Activation::Tanh ? "tanh" : "linear") << "\n";
    auto dump = [&](const char* name, const std::vector<double>& v) {
        ss << name << " " << v.size() << "\n";
        for (std::size_t i = 0; i < v.size(); ++i)
            ss << format_g17(v[i]) << (((i + 1) % 8 == 0 || i + 1 == v.size()) ? '\n' : ' ');
    };
    dump("feature_mean", m.feature_mean);
    dump("feature_std", m.feature_std);
    dump("enc_w", m.enc_w);
    dump("enc_b", m.enc_b);
    dump("dec_w", m.dec_w);
    dump("dec_b", m.dec_b);
    write_file_atomic(path, ss.str());
}

AutoencoderModel load_model(const std::string& path) {
    std::istringstream ss(read_file(path));
    std::string tok, schema;
    if (!(ss >> tok >> schema) || tok != "schema" || schema != "agidet.autoencoder.v1")
        throw DataError(path + ": not an agidet autoencoder file");
    AutoencoderModel m;
    int in_dim = 0, hid_dim = 0;
    std::string act;
    if (!(ss >> tok >> in_dim) || tok != "input_dim" || in_dim != kInputDim)
        throw DataError(path + ": bad input_dim");
    if (!(ss >> tok >> hid_dim) || tok != "hidden_dim" || hid_dim != kHiddenDim)
        throw DataError(path + ": bad hidden_dim");
    if (!(ss >> tok >> act) || tok != "activation")
        throw DataError(path + ": bad activation line");
    m.activation = act == "tanh" ? Activation::Tanh : Activation::Linear;
    auto read_vec = [&](const char* name, std::vector<double>& v) {
        std::size_t n = 0;
        if (!(ss >> tok >> n) || tok != name)
            throw DataError(path + ": expected section " + name);
        v.resize(n);
        for (auto& x : v)
            if (!(ss >> x)) throw DataError(path + ": truncated section " + name);
    };
    read_vec("feature_mean", m.feature_mean);
    read_vec("feature_std", m.feature_std);
    read_vec("enc_w", m.enc_w);
    read_vec("enc_b", m.enc_b);
    read_vec("dec_w", m.dec_w);
    read_vec("dec_b", m.dec_b);
    return m;
}

}  // namespace agidet::autoenc
