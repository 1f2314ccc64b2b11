#include "dtypes.hpp"

namespace aiegrid {

std::string dtype_name(IntDType d) {
    switch (d.kind) {
        case DTypeKind::i8: return "i8";
        case DTypeKind::i16: return "i16";
        case DTypeKind::i32: return "i32";
        case DTypeKind::i64: return "i64";
    }
    return "i8";
}

std::optional<IntDType> dtype_from_name(std::string_view name) {
    if (name == "i8") return kI8;
    if (name == "i16") return kI16;
    if (name == "i32") return kI32;
    if (name == "i64") return kI64;
    return std::nullopt;
}

} // namespace aiegrid
