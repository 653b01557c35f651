#include "mfid/sut.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfid/binio.hpp"
#include "mfid/hashing.hpp"
#include "mfid/sut_math.hpp"

namespace mfid {

namespace {

const char* layer_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv3x3: return "conv3x3";
        case LayerKind::relu: return "relu";
        case LayerKind::global_avg_pool: return "gap";
        case LayerKind::dense: return "dense";
        case LayerKind::sigmoid: return "sigmoid";
        case LayerKind::conv1x1: return "conv1x1";
        case LayerKind::upsample_bilinear: return "up";
    }
    return "?";
}

int conv_out_dim(int in, int stride) { return (in + 2 - 3) / stride + 1; }

}  // namespace

void ReferenceSut::finalize() {
    shapes.clear();
    shapes.push_back({in_c, in_h, in_w});
    for (auto& L : layers) {
        auto [c, h, w] = shapes.back();
        switch (L.kind) {
            case LayerKind::conv3x3:
                if (L.in_c != c) throw ValidationError("conv3x3 channel mismatch");
                shapes.push_back({L.out_c, conv_out_dim(h, L.stride), conv_out_dim(w, L.stride)});
                break;
            case LayerKind::conv1x1:
                if (L.in_c != c) throw ValidationError("conv1x1 channel mismatch");
                shapes.push_back({L.out_c, h, w});
                break;
            case LayerKind::relu:
            case LayerKind::sigmoid:
                shapes.push_back({c, h, w});
                break;
            case LayerKind::global_avg_pool:
                shapes.push_back({c, 1, 1});
                break;
            case LayerKind::dense:
                if (L.in_dim != c * h * w) throw ValidationError("dense input mismatch");
                shapes.push_back({L.out_dim, 1, 1});
                break;
            case LayerKind::upsample_bilinear:
                shapes.push_back({c, h * L.factor, w * L.factor});
                break;
        }
    }
    if (weights.size() != layers.size()) weights.resize(layers.size());
    for (size_t i = 0; i < layers.size(); ++i) {
        const size_t want = weight_count(static_cast<int>(i));
        if (weights[i].size() != want) {
            if (!weights[i].empty())
                throw ValidationError("weight buffer size mismatch at layer " + std::to_string(i));
            weights[i].assign(want, 0.f);
        }
    }
}

size_t ReferenceSut::weight_count(int layer) const {
    const auto& L = layers[static_cast<size_t>(layer)];
    switch (L.kind) {
        case LayerKind::conv3x3:
            return static_cast<size_t>(L.out_c) * L.in_c * 9 + static_cast<size_t>(L.out_c);
        case LayerKind::conv1x1:
            return static_cast<size_t>(L.out_c) * L.in_c + static_cast<size_t>(L.out_c);
        case LayerKind::dense:
            return static_cast<size_t>(L.out_dim) * L.in_dim + static_cast<size_t>(L.out_dim);
        default:
            return 0;
    }
}

uint32_t ReferenceSut::weight_checksum() const {
    std::vector<uint8_t> bytes;
    for (const auto& w : weights) {
        const auto* p = reinterpret_cast<const uint8_t*>(w.data());
        bytes.insert(bytes.end(), p, p + w.size() * sizeof(float));
    }
    return crc32_of(bytes.data(), bytes.size());
}

std::string ReferenceSut::arch_string() const {
    std::ostringstream os;
    os << (kind == SutKind::steering ? "steering" : "segmentation") << ':' << in_h << 'x'
       << in_w << 'x' << in_c;
    for (const auto& L : layers) {
        os << '|' << layer_name(L.kind);
        if (L.kind == LayerKind::conv3x3)
            os << '(' << L.in_c << "->" << L.out_c << ",s" << L.stride << ')';
        else if (L.kind == LayerKind::conv1x1)
            os << '(' << L.in_c << "->" << L.out_c << ')';
        else if (L.kind == LayerKind::dense)
            os << '(' << L.in_dim << "->" << L.out_dim << ')';
        else if (L.kind == LayerKind::upsample_bilinear)
            os << "(x" << L.factor << ')';
    }
    return os.str();
}

uint64_t ReferenceSut::id_hash() const {
    uint64_t h = fnv1a64(arch_string());
    for (const auto& w : weights)
        if (!w.empty()) h = fnv1a64(w.data(), w.size() * sizeof(float), h);
    return h;
}

int ReferenceSut::output_dim() const {
    const auto& sh = shapes.back();
    return sh[0] * sh[1] * sh[2];
}

SutOutput forward(const ReferenceSut& sut, const Image& x) {
    detail::SutRunnerT<float> runner(sut);
    const auto out = runner.forward(x.data);
    return SutOutput{sut.kind, std::vector<float>(out.begin(), out.end())};
}

std::pair<SutOutput, LayerActivations> forward_with_taps(const ReferenceSut& sut,
                                                         const Image& x) {
    detail::SutRunnerT<float> runner(sut);
    const auto out = runner.forward(x.data);
    LayerActivations acts;
    for (int tap : sut.taps) {
        const auto& sh = sut.shapes[static_cast<size_t>(tap) + 1];
        Tensor t;
        t.c = sh[0];
        t.h = sh[1];
        t.w = sh[2];
        t.data = runner.act[static_cast<size_t>(tap) + 1];
        acts.emplace(tap, std::move(t));
    }
    return {SutOutput{sut.kind, std::vector<float>(out.begin(), out.end())}, std::move(acts)};
}

PixelGrad input_gradient(const ReferenceSut& sut, const Image& x, const OutputObjective& obj) {
    detail::SutRunnerT<float> runner(sut);
    const auto out = runner.forward(x.data);
    std::vector<float> dout(out.size(), 0.f);
    obj(out, dout);
    std::vector<float> g;
    runner.backward_input(dout, g);
    PixelGrad pg;
    pg.h = sut.in_h;
    pg.w = sut.in_w;
    pg.c = sut.in_c;
    pg.g = std::move(g);
    return pg;
}

namespace {

void he_init(ReferenceSut& sut, Rng& rng) {
    for (size_t li = 0; li < sut.layers.size(); ++li) {
        const size_t n = sut.weight_count(static_cast<int>(li));
        if (n == 0) continue;
        const auto& L = sut.layers[li];
        int fan_in = 1;
        size_t bias_count = 0;
        if (L.kind == LayerKind::conv3x3) {
            fan_in = L.in_c * 9;
            bias_count = static_cast<size_t>(L.out_c);
        } else if (L.kind == LayerKind::conv1x1) {
            fan_in = L.in_c;
            bias_count = static_cast<size_t>(L.out_c);
        } else if (L.kind == LayerKind::dense) {
            fan_in = L.in_dim;
            bias_count = static_cast<size_t>(L.out_dim);
        }
        const double std = std::sqrt(2.0 / fan_in);
        Rng lr = rng.split("layer", li);
        auto& w = sut.weights[li];
        w.resize(n);
        const size_t kernel_count = n - bias_count;
        for (size_t i = 0; i < kernel_count; ++i)
            w[i] = static_cast<float>(lr.next_normal() * std);
        for (size_t i = kernel_count; i < n; ++i) w[i] = 0.f;
    }
}

}  // namespace

ReferenceSut make_steering_sut() {
    ReferenceSut s;
    s.kind = SutKind::steering;
    s.id = "steer";
    s.layers = {
        {LayerKind::conv3x3, 3, 8, 2},
        {LayerKind::relu},
        {LayerKind::conv3x3, 8, 16, 2},
        {LayerKind::relu},
        {LayerKind::conv3x3, 16, 32, 2},
        {LayerKind::relu},
        {LayerKind::global_avg_pool},
        {LayerKind::dense, 0, 0, 1, 32, 16},
        {LayerKind::relu},
        {LayerKind::dense, 0, 0, 1, 16, 1},
    };
    s.taps = {5};  // last conv block, post-activation
    s.finalize();
    return s;
}

ReferenceSut make_segmentation_sut() {
    ReferenceSut s;
    s.kind = SutKind::segmentation;
    s.id = "da";
    s.layers = {
        {LayerKind::conv3x3, 3, 8, 2},
        {LayerKind::relu},
        {LayerKind::conv3x3, 8, 16, 2},
        {LayerKind::relu},
        {LayerKind::conv3x3, 16, 32, 1},
        {LayerKind::relu},
        {LayerKind::conv1x1, 32, 1, 1},
        {LayerKind::upsample_bilinear, 0, 0, 1, 0, 0, 4},
    };
    s.taps = {5};
    s.finalize();
    return s;
}

ReferenceSut make_planted_sut(const IntRect& patch, float weight) {
    ReferenceSut s;
    s.kind = SutKind::steering;
    s.id = "planted";
    const int dim = kImageSize * kImageSize * 3;
    s.layers = {{LayerKind::dense, 0, 0, 1, dim, 1}};
    s.taps = {};
    s.finalize();
    auto& w = s.weights[0];
    for (int y = patch.y0; y < patch.y1; ++y)
        for (int x = patch.x0; x < patch.x1; ++x)
            for (int c = 0; c < 3; ++c)
                w[(static_cast<size_t>(c) * kImageSize + y) * kImageSize + x] = weight;
    return s;
}

ReferenceSut randomize_weights(const ReferenceSut& sut, Rng& rng) {
    ReferenceSut out = sut;
    Rng r = rng.split("randomize", 0);
    he_init(out, r);
    return out;
}

// Reference training ---------------------------------------------------------

namespace {

struct TrainSet {
    std::vector<Image> images;
    std::vector<Masks> masks;
};

TrainSet build_train_set(int n, uint64_t seed) {
    TrainSet ts;
    Rng root(seed);
    Rng grid_rng = root.split("scenarios", 0);
    auto sds = sample_scenario_grid(n, grid_rng);
    ts.images.reserve(static_cast<size_t>(n));
    ts.masks.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng img_rng = root.split("image", static_cast<uint64_t>(i));
        ts.images.push_back(render_real(sds[static_cast<size_t>(i)], img_rng));
        ts.masks.push_back(render_masks(sds[static_cast<size_t>(i)]));
    }
    return ts;
}

const Grid& task_mask(const Masks& m, SutTask task) {
    return task == SutTask::lane ? m.lane : m.drivable;
}

// Backward pass with weight gradients, reusing the runner's forward state.
void accumulate_weight_grads(const ReferenceSut& sut, detail::SutRunnerT<float>& runner,
                             std::span<const float> dout,
                             std::vector<std::vector<float>>& wgrads) {
    auto& grad = runner.grad;
    grad.back().assign(dout.begin(), dout.end());
    for (size_t li = sut.layers.size(); li-- > 0;) {
        const auto& L = sut.layers[li];
        const auto& in_sh = sut.shapes[li];
        const auto& out_sh = sut.shapes[li + 1];
        const float* g_out = grad[li + 1].data();
        float* g_in = grad[li].data();
        const float* in = runner.act[li].data();
        switch (L.kind) {
            case LayerKind::conv3x3: {
                float* dw = wgrads[li].data();
                float* db = dw + static_cast<size_t>(L.out_c) * L.in_c * 9;
                detail::conv3x3_backward_weights(in, g_out, dw, db, L.in_c, L.out_c, in_sh[1],
                                                 in_sh[2], out_sh[1], out_sh[2], L.stride);
                if (li > 0)
                    detail::conv3x3_backward_input(sut.weights[li].data(), g_out, g_in, L.in_c,
                                                   L.out_c, in_sh[1], in_sh[2], out_sh[1],
                                                   out_sh[2], L.stride, runner.scratch);
                break;
            }
            case LayerKind::conv1x1: {
                float* dw = wgrads[li].data();
                float* db = dw + static_cast<size_t>(L.out_c) * L.in_c;
                detail::conv1x1_backward_weights(in, g_out, dw, db, L.in_c, L.out_c,
                                                 in_sh[1] * in_sh[2]);
                if (li > 0)
                    detail::conv1x1_backward_input(sut.weights[li].data(), g_out, g_in, L.in_c,
                                                   L.out_c, in_sh[1] * in_sh[2]);
                break;
            }
            case LayerKind::relu:
                for (size_t i = 0; i < grad[li].size(); ++i)
                    g_in[i] = runner.act[li][i] > 0.f ? g_out[i] : 0.f;
                break;
            case LayerKind::sigmoid:
                for (size_t i = 0; i < grad[li].size(); ++i) {
                    const float y = runner.act[li + 1][i];
                    g_in[i] = g_out[i] * y * (1.f - y);
                }
                break;
            case LayerKind::global_avg_pool: {
                const float inv = 1.f / static_cast<float>(in_sh[1] * in_sh[2]);
                for (int ch = 0; ch < in_sh[0]; ++ch) {
                    const float g = g_out[ch] * inv;
                    float* gp = g_in + static_cast<size_t>(ch) * in_sh[1] * in_sh[2];
                    for (int i = 0; i < in_sh[1] * in_sh[2]; ++i) gp[i] = g;
                }
                break;
            }
            case LayerKind::dense: {
                float* dw = wgrads[li].data();
                float* db = dw + static_cast<size_t>(L.out_dim) * L.in_dim;
                const float* W = sut.weights[li].data();
                for (int i = 0; i < L.in_dim; ++i) g_in[i] = 0.f;
                for (int o = 0; o < L.out_dim; ++o) {
                    const float g = g_out[o];
                    db[o] += g;
                    float* dwrow = dw + static_cast<size_t>(o) * L.in_dim;
                    const float* wrow = W + static_cast<size_t>(o) * L.in_dim;
                    for (int i = 0; i < L.in_dim; ++i) {
                        dwrow[i] += g * in[i];
                        g_in[i] += wrow[i] * g;
                    }
                }
                break;
            }
            case LayerKind::upsample_bilinear:
                detail::upsample_backward(g_out, g_in, in_sh[0], in_sh[1], in_sh[2], L.factor);
                break;
        }
    }
}

}  // namespace

ReferenceSut train_reference_sut(SutTask task, const TrainRecipe& recipe) {
    ReferenceSut sut = task == SutTask::steer ? make_steering_sut() : make_segmentation_sut();
    if (task == SutTask::lane) sut.id = "ll";
    Rng root(recipe.seed);
    Rng init_rng = root.split("init", 0);
    he_init(sut, init_rng);

    TrainSet ts = build_train_set(recipe.train_images, recipe.seed ^ 0x64617461ull);

    detail::SutRunnerT<float> runner(sut);
    std::vector<std::vector<float>> wgrads(sut.layers.size());
    for (size_t i = 0; i < sut.layers.size(); ++i)
        wgrads[i].assign(sut.weight_count(static_cast<int>(i)), 0.f);

    Rng batch_rng = root.split("batches", 0);
    const int out_dim = sut.output_dim();
    std::vector<float> dout(static_cast<size_t>(out_dim));
    std::vector<float> target;

    for (int step = 0; step < recipe.steps; ++step) {
        for (auto& g : wgrads) std::fill(g.begin(), g.end(), 0.f);
        for (int b = 0; b < recipe.batch; ++b) {
            const auto idx = static_cast<size_t>(
                batch_rng.next_int(0, recipe.train_images - 1));
            const auto out = runner.forward(ts.images[idx].data);
            if (task == SutTask::steer) {
                dout[0] = out[0] - static_cast<float>(ts.masks[idx].steering_label);
            } else {
                const Grid& mask = task_mask(ts.masks[idx], task);
                const float inv_n = 1.f / static_cast<float>(out.size());
                for (size_t i = 0; i < out.size(); ++i) {
                    const float p = 1.f / (1.f + std::exp(-out[i]));
                    dout[i] = (p - mask.v[i]) * inv_n;
                }
            }
            accumulate_weight_grads(sut, runner, std::span<const float>(dout.data(), out.size()),
                                    wgrads);
        }
        const float scale = recipe.lr / static_cast<float>(recipe.batch);
        for (size_t li = 0; li < sut.layers.size(); ++li)
            for (size_t i = 0; i < wgrads[li].size(); ++i)
                sut.weights[li][i] -= scale * wgrads[li][i];
    }
    return sut;
}

double eval_steering_mae(const ReferenceSut& sut, int n_images, uint64_t seed) {
    Rng root(seed);
    Rng grid_rng = root.split("scenarios", 0);
    auto sds = sample_scenario_grid(n_images, grid_rng);
    detail::SutRunnerT<float> runner(sut);
    double acc = 0.0;
    for (int i = 0; i < n_images; ++i) {
        Rng img_rng = root.split("image", static_cast<uint64_t>(i));
        const Image img = render_real(sds[static_cast<size_t>(i)], img_rng);
        const auto out = runner.forward(img.data);
        acc += std::abs(static_cast<double>(out[0]) -
                        render_masks(sds[static_cast<size_t>(i)]).steering_label);
    }
    return acc / n_images;
}

double eval_segmentation_iou(const ReferenceSut& sut, SutTask task, int n_images, uint64_t seed) {
    Rng root(seed);
    Rng grid_rng = root.split("scenarios", 0);
    auto sds = sample_scenario_grid(n_images, grid_rng);
    detail::SutRunnerT<float> runner(sut);
    double acc = 0.0;
    for (int i = 0; i < n_images; ++i) {
        Rng img_rng = root.split("image", static_cast<uint64_t>(i));
        const Image img = render_real(sds[static_cast<size_t>(i)], img_rng);
        const auto out = runner.forward(img.data);
        const Grid& mask = task_mask(render_masks(sds[static_cast<size_t>(i)]), task);
        size_t inter = 0, uni = 0;
        for (size_t p = 0; p < out.size(); ++p) {
            const bool pred = out[p] > 0.f;
            const bool truth = mask.v[p] > 0.5f;
            inter += (pred && truth) ? 1 : 0;
            uni += (pred || truth) ? 1 : 0;
        }
        acc += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return acc / n_images;
}

// Weight file ----------------------------------------------------------------

void save_sut(const ReferenceSut& sut, const std::filesystem::path& path) {
    BinWriter w;
    w.magic("MFWT");
    w.u32(sut.kind == SutKind::steering ? 0u : 1u);
    w.u32(static_cast<uint32_t>(sut.id.size()));
    w.bytes(sut.id.data(), sut.id.size());
    w.u32(static_cast<uint32_t>(sut.in_h));
    w.u32(static_cast<uint32_t>(sut.in_w));
    w.u32(static_cast<uint32_t>(sut.in_c));
    w.u32(static_cast<uint32_t>(sut.taps.size()));
    for (int t : sut.taps) w.u32(static_cast<uint32_t>(t));
    w.u32(static_cast<uint32_t>(sut.layers.size()));
    for (size_t i = 0; i < sut.layers.size(); ++i) {
        const auto& L = sut.layers[i];
        w.u32(static_cast<uint32_t>(L.kind));
        w.u32(static_cast<uint32_t>(L.in_c));
        w.u32(static_cast<uint32_t>(L.out_c));
        w.u32(static_cast<uint32_t>(L.stride));
        w.u32(static_cast<uint32_t>(L.in_dim));
        w.u32(static_cast<uint32_t>(L.out_dim));
        w.u32(static_cast<uint32_t>(L.factor));
        w.u64(sut.weights[i].size());
        w.f32_array(sut.weights[i].data(), sut.weights[i].size());
    }
    w.crc32_trailer();
    w.save(path);
}

ReferenceSut load_sut(const std::filesystem::path& path) {
    BinReader r = BinReader::load(path);
    r.expect_magic("MFWT");
    ReferenceSut sut;
    sut.kind = r.u32() == 0 ? SutKind::steering : SutKind::segmentation;
    const uint32_t id_len = r.u32();
    if (id_len > 256) throw IoError("sut id too long: " + path.string());
    sut.id = r.str(id_len);
    sut.in_h = static_cast<int>(r.u32());
    sut.in_w = static_cast<int>(r.u32());
    sut.in_c = static_cast<int>(r.u32());
    const uint32_t tap_count = r.u32();
    for (uint32_t i = 0; i < tap_count; ++i) sut.taps.push_back(static_cast<int>(r.u32()));
    const uint32_t layer_count = r.u32();
    for (uint32_t i = 0; i < layer_count; ++i) {
        LayerSpec L;
        L.kind = static_cast<LayerKind>(r.u32());
        L.in_c = static_cast<int>(r.u32());
        L.out_c = static_cast<int>(r.u32());
        L.stride = static_cast<int>(r.u32());
        L.in_dim = static_cast<int>(r.u32());
        L.out_dim = static_cast<int>(r.u32());
        L.factor = static_cast<int>(r.u32());
        sut.layers.push_back(L);
        const uint64_t n = r.u64();
        std::vector<float> wv(n);
        r.f32_array(wv.data(), n);
        sut.weights.push_back(std::move(wv));
    }
    r.check_crc32_trailer();
    sut.finalize();
    return sut;
}

ReferenceSut load_or_train_sut(SutTask task, const std::filesystem::path& path,
                               const TrainRecipe& recipe) {
    if (std::filesystem::exists(path)) return load_sut(path);
    ReferenceSut sut = train_reference_sut(task, recipe);
    save_sut(sut, path);
    return sut;
}

const char* sut_task_name(SutTask task) {
    switch (task) {
        case SutTask::steer: return "steer";
        case SutTask::drivable: return "da";
        case SutTask::lane: return "ll";
    }
    return "?";
}

}  // namespace mfid
