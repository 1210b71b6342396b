#pragma once

#include <array>
#include <string>

namespace barb {

// The four image kinds: FLAIR / T2-FSE sequences at the anterior commissure
// and at the frontal horns of the lateral ventricles.
enum class Modality { flair_ac, flair_lv, t2_ac, t2_lv };

inline constexpr std::array<Modality, 4> kAllModalities = {Modality::flair_ac, Modality::flair_lv,
                                                           Modality::t2_ac, Modality::t2_lv};

std::string to_string(Modality m);
Modality modality_from_string(const std::string& name);

}  // namespace barb
