#pragma once

#include <string>
#include <vector>

#include "tabrep/schema.hpp"

namespace tabrep {

enum class CodecKind { CatConverter, OneHot, AnalogBits, Dictionary };

std::string to_string(CodecKind k);
CodecKind codec_kind_from_string(const std::string& s);

// encoded width of one categorical column with K categories
int codec_width(CodecKind kind, int k);

struct CategoricalCodec {
    CodecKind kind = CodecKind::CatConverter;
    std::vector<int> cardinalities;  // K_j per categorical block column
    std::vector<int> widths;         // w_j per categorical block column
    // CatConverter: vectors with norm below this decode as out-of-index.
    double r_min = 0.0;
    // OneHot: encode as softmax(one-hot) instead of +/-1 indicators.
    bool softmax_relaxation = false;

    int column_width(int j) const { return widths[static_cast<size_t>(j)]; }
    int total_width() const;
};

CategoricalCodec make_codec(CodecKind kind, const TableSchema& schema, double r_min = 0.0,
                            bool softmax_relaxation = false);

// Encode one category index; `out` receives exactly codec_width values.
void cat_encode(const CategoricalCodec& codec, int32_t c, int k, double* out);
std::vector<double> cat_encode(const CategoricalCodec& codec, int32_t c, int k);

// Decode one encoded vector of the column's width. `ooi` (optional) is set
// when the out-of-index cast to index 0 fired.
int32_t cat_decode(const CategoricalCodec& codec, const double* v, int k, bool* ooi = nullptr);
int32_t cat_decode(const CategoricalCodec& codec, const std::vector<double>& v, int k,
                   bool* ooi = nullptr);

// minimum pairwise distance of the K CatConverter phase points: 2*sin(pi/K)
double catconverter_min_pairwise_distance(int k);

}  // namespace tabrep
