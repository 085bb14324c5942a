// Declarative 3D U-Net architecture description: shape propagation through the
// 14 blocks and parameter counting under explicit conventions. No tensors,
// no training runtime; hyperparameters ride along as inert metadata.
#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "mctrace/core.hpp"

namespace mctrace {

// Feature map shape in HWDC order (height, width, depth, channels).
struct TensorShape {
    int h = 0, w = 0, d = 0, c = 0;
    bool operator==(const TensorShape&) const = default;

    std::string str() const {
        return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(d) + "x" +
               std::to_string(c);
    }
};

enum class Activation { None, ReLU, Softmax };

struct BlockSpec {
    int index = 0;
    int kernel = 3;          // cubic kernel edge
    bool stride_hw2 = false; // stride 2 along height and width, depth unchanged
    bool has_maxpool = false;
    Activation activation = Activation::None;
    bool batch_norm = false;
    int repeat = 1;
    int in_channels = 0;
    int out_channels = 0;    // pre-concatenation for up-conv blocks
    bool is_upconv = false;
    int concat_channels = 0; // skip channels appended after an up-conv
};

struct TrainingMetadata {
    double dropout_rate = 0.15;
    double l2_factor = 0.1;
    std::string optimizer = "adam";
    double learning_rate = 0.001;
    int batch_size = 3;
    int iterations = 100000;
    std::string loss = "softmax cross-entropy with logits";
};

struct NetSpec {
    std::vector<BlockSpec> blocks;
    TensorShape input{64, 64, 64, 1};
    TrainingMetadata metadata;
};

// The 14-block encoder/decoder plan: channels 64->128->256->512 down,
// up-convolutions with (512+256), (256+128), (128+64) skip concatenations,
// and a final 1x1x1 convolution to 2 channels.
inline NetSpec default_block_table() {
    NetSpec spec;
    auto conv = [](int idx, int cin, int cout) {
        BlockSpec b;
        b.index = idx;
        b.kernel = 3;
        b.activation = Activation::ReLU;
        b.batch_norm = true;
        b.repeat = 2;
        b.in_channels = cin;
        b.out_channels = cout;
        return b;
    };
    auto pool = [](int idx, int c) {
        BlockSpec b;
        b.index = idx;
        b.kernel = 3;
        b.stride_hw2 = true;
        b.has_maxpool = true;
        b.in_channels = c;
        b.out_channels = c;
        return b;
    };
    auto upconv = [](int idx, int cin, int cout, int skip) {
        BlockSpec b;
        b.index = idx;
        b.kernel = 2;
        b.stride_hw2 = true;
        b.activation = Activation::ReLU;
        b.batch_norm = true;
        b.in_channels = cin;
        b.out_channels = cout;
        b.is_upconv = true;
        b.concat_channels = skip;
        return b;
    };
    spec.blocks.push_back(conv(1, 1, 64));
    spec.blocks.push_back(pool(2, 64));
    spec.blocks.push_back(conv(3, 64, 128));
    spec.blocks.push_back(pool(4, 128));
    spec.blocks.push_back(conv(5, 128, 256));
    spec.blocks.push_back(pool(6, 256));
    spec.blocks.push_back(conv(7, 256, 512));
    spec.blocks.push_back(upconv(8, 512, 512, 256));
    spec.blocks.push_back(conv(9, 512 + 256, 256));
    spec.blocks.push_back(upconv(10, 256, 256, 128));
    spec.blocks.push_back(conv(11, 256 + 128, 128));
    spec.blocks.push_back(upconv(12, 128, 128, 64));
    spec.blocks.push_back(conv(13, 128 + 64, 64));
    {
        BlockSpec b;
        b.index = 14;
        b.kernel = 1;
        b.activation = Activation::Softmax;
        b.repeat = 1;
        b.in_channels = 64;
        b.out_channels = 2;
        spec.blocks.push_back(b);
    }
    return spec;
}

struct ShapePair {
    int block = 0;
    TensorShape input, output;
};

// Propagate the input shape through the block list. Stride-1 convolutions are
// same-padded; stride 2x2x1 halves H and W (floor) for pooling and doubles
// them for up-convolutions; concatenation appends the skip channels.
inline std::vector<ShapePair> propagate_shapes(const NetSpec& spec) {
    std::vector<ShapePair> out;
    TensorShape cur = spec.input;
    for (const auto& b : spec.blocks) {
        if (cur.c != b.in_channels)
            throw std::invalid_argument("shape chain mismatch at block " +
                                        std::to_string(b.index) + ": carried " +
                                        std::to_string(cur.c) + " channels, block declares " +
                                        std::to_string(b.in_channels));
        TensorShape next = cur;
        if (b.has_maxpool && b.stride_hw2) {
            next.h = cur.h / 2;
            next.w = cur.w / 2;
        } else if (b.is_upconv && b.stride_hw2) {
            next.h = cur.h * 2;
            next.w = cur.w * 2;
        }
        next.c = b.out_channels + b.concat_channels;
        out.push_back({b.index, cur, next});
        cur = next;
    }
    return out;
}

struct CountConventions {
    bool conv_bias = true;
    int bn_params_per_channel = 0;  // 0, 2 (scale+shift), or 4 (+running stats)
};

struct BlockCount {
    int block = 0;
    long long parameters = 0;
};

struct ParameterCensus {
    std::vector<BlockCount> per_block;
    long long total = 0;
};

// Convolution blocks with repeat r expand to Cin->Cout then Cout->Cout convs,
// each k^3 * Cin * Cout weights plus optional bias and BN parameters.
// Up-convolutions count as a single 2^3 kernel; pooling has no parameters.
inline ParameterCensus count_parameters(const NetSpec& spec,
                                        const CountConventions& conv = CountConventions{}) {
    ParameterCensus census;
    for (const auto& b : spec.blocks) {
        long long count = 0;
        if (!b.has_maxpool) {
            long long k3 = static_cast<long long>(b.kernel) * b.kernel * b.kernel;
            int cin = b.in_channels;
            for (int r = 0; r < b.repeat; ++r) {
                count += k3 * cin * b.out_channels;
                if (conv.conv_bias) count += b.out_channels;
                if (b.batch_norm) count += static_cast<long long>(conv.bn_params_per_channel) * b.out_channels;
                cin = b.out_channels;
            }
        }
        census.per_block.push_back({b.index, count});
        census.total += count;
    }
    return census;
}

// Externally quoted parameter total for this architecture. The census below
// reports its delta to this figure but never asserts equality; none of the
// supported counting conventions reproduces it exactly.
constexpr long long kPublishedParameterTotal = 19077636;

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::ReLU: return "ReLU";
        case Activation::Softmax: return "Softmax";
        default: return "-";
    }
}

// Aligned text table of block shapes and parameter counts, plus the census
// under each counting convention with its delta to the reported total.
inline void print_netspec(const NetSpec& spec, std::ostream& out) {
    auto shapes = propagate_shapes(spec);
    char buf[160];
    out << "Block  Kernel  Stride  MaxPool  Act      BN   Rep  Input            Output\n";
    for (std::size_t i = 0; i < spec.blocks.size(); ++i) {
        const auto& b = spec.blocks[i];
        std::snprintf(buf, sizeof(buf), "%-6d %d^3     %-7s %-8s %-8s %-4s %-4d %-16s %-16s\n",
                      b.index, b.kernel, b.stride_hw2 ? "2^2x1" : "1",
                      b.has_maxpool ? "Yes" : "No", activation_name(b.activation),
                      b.batch_norm ? "Yes" : "No", b.repeat, shapes[i].input.str().c_str(),
                      shapes[i].output.str().c_str());
        out << buf;
    }
    out << "\nParameter census:\n";
    struct Named {
        const char* name;
        CountConventions conv;
    };
    const Named conventions[] = {
        {"bias, no BN params", {true, 0}},
        {"bias, BN 2/channel", {true, 2}},
        {"bias, BN 4/channel", {true, 4}},
        {"no bias, no BN params", {false, 0}},
        {"no bias, BN 2/channel", {false, 2}},
        {"no bias, BN 4/channel", {false, 4}},
    };
    long long best_delta = -1;
    const char* best_name = nullptr;
    for (const auto& [name, cc] : conventions) {
        auto census = count_parameters(spec, cc);
        long long delta = census.total - kPublishedParameterTotal;
        std::snprintf(buf, sizeof(buf), "  %-24s total %-12lld delta vs %lld: %+lld\n", name,
                      census.total, kPublishedParameterTotal, delta);
        out << buf;
        long long ad = delta < 0 ? -delta : delta;
        if (best_delta < 0 || ad < best_delta) {
            best_delta = ad;
            best_name = name;
        }
    }
    out << "closest convention: " << best_name << " (|delta| = " << best_delta << ")\n";

    auto census = count_parameters(spec);
    out << "\nPer-block parameters (bias, no BN params):\n";
    for (const auto& bc : census.per_block) {
        std::snprintf(buf, sizeof(buf), "  block %-3d %lld\n", bc.block, bc.parameters);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "  total     %lld\n", census.total);
    out << buf;
}

}  // namespace mctrace
