#include "hdrvqa/common.hpp"

#include <cstdio>
#include <fstream>

namespace hdrvqa {

const char* error_class_name(ErrorClass c) {
    switch (c) {
        case ErrorClass::Usage: return "USAGE";
        case ErrorClass::ConfigInvalid: return "CONFIG_INVALID";
        case ErrorClass::FileNotFound: return "FILE_NOT_FOUND";
        case ErrorClass::CkptNotFound: return "CKPT_NOT_FOUND";
        case ErrorClass::CkptIncompatible: return "CKPT_INCOMPATIBLE";
        case ErrorClass::GeometryMismatch: return "GEOMETRY_MISMATCH";
        case ErrorClass::IndexOutOfRange: return "INDEX_OUT_OF_RANGE";
        case ErrorClass::DomainError: return "DOMAIN_ERROR";
        case ErrorClass::LayoutMismatch: return "LAYOUT_MISMATCH";
        case ErrorClass::TransferMismatch: return "TRANSFER_MISMATCH";
        case ErrorClass::DecodeFail: return "DECODE_FAIL";
        case ErrorClass::EncoderFail: return "ENCODER_FAIL";
        case ErrorClass::SchemaVersion: return "SCHEMA_VERSION";
        case ErrorClass::DataCorrupt: return "DATA_CORRUPT";
        case ErrorClass::DegenerateInput: return "DEGENERATE_INPUT";
        case ErrorClass::DimensionMismatch: return "DIMENSION_MISMATCH";
        case ErrorClass::SingletonClass: return "SINGLETON_CLASS";
        case ErrorClass::NonFiniteLoss: return "NON_FINITE_LOSS";
        case ErrorClass::Internal: return "INTERNAL";
    }
    return "INTERNAL";
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

uint64_t hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorClass::FileNotFound, "cannot open for hashing: " + path);
    uint64_t h = kFnvBasis;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a64(buf, size_t(in.gcount()), h);
    }
    return h;
}

}  // namespace hdrvqa
