#include "etm/kernels.hpp"

namespace etm::kernels {

extern const Ops scalar_ops;
#if ETM_HAVE_AVX2_TU
const Ops* avx2_ops();
#else
inline const Ops* avx2_ops() { return nullptr; }
#endif

const Ops& active() {
  static const Ops* selected = [] {
    if (const Ops* v = avx2_ops()) return v;
    return &scalar_ops;
  }();
  return *selected;
}

const std::vector<const Ops*>& available() {
  static const std::vector<const Ops*> all = [] {
    std::vector<const Ops*> v{&scalar_ops};
    if (const Ops* a = avx2_ops()) v.push_back(a);
    return v;
  }();
  return all;
}

}  // namespace etm::kernels
