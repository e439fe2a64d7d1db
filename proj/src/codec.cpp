#include "tabrep/codec.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tabrep {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::string to_string(CodecKind k) {
    switch (k) {
        case CodecKind::CatConverter: return "catconverter";
        case CodecKind::OneHot: return "onehot";
        case CodecKind::AnalogBits: return "analogbits";
        case CodecKind::Dictionary: return "dictionary";
    }
    return "catconverter";
}

CodecKind codec_kind_from_string(const std::string& s) {
    if (s == "catconverter") return CodecKind::CatConverter;
    if (s == "onehot") return CodecKind::OneHot;
    if (s == "analogbits") return CodecKind::AnalogBits;
    if (s == "dictionary") return CodecKind::Dictionary;
    throw std::invalid_argument("codec: unknown kind: " + s);
}

int codec_width(CodecKind kind, int k) {
    if (k < 2) throw std::invalid_argument("codec: cardinality must be >= 2");
    switch (kind) {
        case CodecKind::CatConverter: return 2;
        case CodecKind::OneHot: return k;
        case CodecKind::AnalogBits: {
            int bits = 0;
            while ((1 << bits) < k) ++bits;
            return bits;
        }
        case CodecKind::Dictionary: return 1;
    }
    return 2;
}

int CategoricalCodec::total_width() const {
    return std::accumulate(widths.begin(), widths.end(), 0);
}

CategoricalCodec make_codec(CodecKind kind, const TableSchema& schema, double r_min,
                            bool softmax_relaxation) {
    CategoricalCodec codec;
    codec.kind = kind;
    codec.r_min = r_min;
    codec.softmax_relaxation = softmax_relaxation;
    for (int idx : schema.categorical_indices()) {
        const int k = schema.columns[static_cast<size_t>(idx)].cardinality();
        codec.cardinalities.push_back(k);
        codec.widths.push_back(codec_width(kind, k));
    }
    return codec;
}

void cat_encode(const CategoricalCodec& codec, int32_t c, int k, double* out) {
    if (c < 0 || c >= k) throw std::out_of_range("cat_encode: category index out of range");
    switch (codec.kind) {
        case CodecKind::CatConverter: {
            const double phase = kTwoPi * static_cast<double>(c) / static_cast<double>(k);
            out[0] = std::cos(phase);
            out[1] = std::sin(phase);
            return;
        }
        case CodecKind::OneHot: {
            if (codec.softmax_relaxation) {
                const double e = std::exp(1.0);
                const double denom = e + static_cast<double>(k - 1);
                for (int i = 0; i < k; ++i) out[i] = (i == c ? e : 1.0) / denom;
            } else {
                for (int i = 0; i < k; ++i) out[i] = i == c ? 1.0 : -1.0;
            }
            return;
        }
        case CodecKind::AnalogBits: {
            const int bits = codec_width(CodecKind::AnalogBits, k);
            for (int i = 0; i < bits; ++i) {
                const int bit = (c >> (bits - 1 - i)) & 1;  // MSB first
                out[i] = static_cast<double>(2 * bit - 1);
            }
            return;
        }
        case CodecKind::Dictionary: {
            out[0] = -1.0 + 2.0 * static_cast<double>(c) / static_cast<double>(k - 1);
            return;
        }
    }
}

std::vector<double> cat_encode(const CategoricalCodec& codec, int32_t c, int k) {
    std::vector<double> out(static_cast<size_t>(codec_width(codec.kind, k)));
    cat_encode(codec, c, k, out.data());
    return out;
}

int32_t cat_decode(const CategoricalCodec& codec, const double* v, int k, bool* ooi) {
    if (ooi) *ooi = false;
    switch (codec.kind) {
        case CodecKind::CatConverter: {
            const double norm = std::hypot(v[0], v[1]);
            if (norm <= codec.r_min) {
                if (ooi) *ooi = true;
                return 0;
            }
            double phase = std::atan2(v[1], v[0]);
            if (phase < 0) phase += kTwoPi;
            const double pos = phase * static_cast<double>(k) / kTwoPi;  // in [0, K)
            // nearest of floor/ceil, smaller index on exact ties (incl. the K-1/0 wrap)
            const int lo = static_cast<int>(pos) % k;
            const int hi = (lo + 1) % k;
            double frac = pos - std::floor(pos);
            if (frac < 0.5) return lo;
            if (frac > 0.5) return hi;
            return std::min(lo, hi);
        }
        case CodecKind::OneHot: {
            int best = 0;
            for (int i = 1; i < k; ++i)
                if (v[i] > v[best]) best = i;
            return best;
        }
        case CodecKind::AnalogBits: {
            const int bits = codec_width(CodecKind::AnalogBits, k);
            int32_t value = 0;
            for (int i = 0; i < bits; ++i) value = (value << 1) | (v[i] > 0.0 ? 1 : 0);
            if (value >= k) {
                if (ooi) *ooi = true;
                return 0;
            }
            return value;
        }
        case CodecKind::Dictionary: {
            const double pos = (v[0] + 1.0) * static_cast<double>(k - 1) / 2.0;
            const int lo = static_cast<int>(std::clamp(std::floor(pos), 0.0,
                                                       static_cast<double>(k - 1)));
            const int hi = std::min(lo + 1, k - 1);
            const double frac = pos - static_cast<double>(lo);
            if (pos <= 0.0) return 0;
            if (frac < 0.5) return lo;
            if (frac > 0.5) return hi;
            return lo;  // tie toward the smaller index
        }
    }
    return 0;
}

int32_t cat_decode(const CategoricalCodec& codec, const std::vector<double>& v, int k, bool* ooi) {
    return cat_decode(codec, v.data(), k, ooi);
}

double catconverter_min_pairwise_distance(int k) {
    return 2.0 * std::sin(3.14159265358979323846 / static_cast<double>(k));
}

}  // namespace tabrep
