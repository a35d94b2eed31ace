#include "blendfuse/labels.hpp"

namespace blendfuse {

SoftLabel encode_soft_label(const Blend& b)
{
    SoftLabel y = SoftLabel::Zero();
    if (b.is_single()) {
        y(index_of(b.primary)) = 1.0;
        return y;
    }
    if (b.salience_primary == 70) {
        y(index_of(b.primary)) = 0.7;
        y(index_of(*b.secondary)) = 0.3;
    } else {
        y(index_of(b.primary)) = 0.5;
        y(index_of(*b.secondary)) = 0.5;
    }
    return y;
}

bool is_soft_label(const Distribution& y)
{
    std::vector<double> nz;
    for (int i = 0; i < kNumEmotions; ++i) {
        if (y(i) < 0.0)
            return false;
        if (y(i) != 0.0)
            nz.push_back(y(i));
    }
    std::sort(nz.begin(), nz.end());
    if (nz.size() == 1)
        return nz[0] == 1.0;
    if (nz.size() == 2)
        return (nz[0] == 0.3 && nz[1] == 0.7) || (nz[0] == 0.5 && nz[1] == 0.5);
    return false;
}

} // namespace blendfuse
