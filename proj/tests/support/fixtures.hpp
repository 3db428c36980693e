#pragma once

#include <string_view>

namespace hoigen::testing {

// Golden sample program. Note the space in "Contact_with_Middle Finger" and
// the off-menu motion token "Full_Hand_Grasp"; both are kept on purpose.
inline constexpr std::string_view kGoldenProgram = R"(Right_Hand:
    - Motion_Type: Support
    - Thumb: Fully_Open 
    - Index_Finger: Fully_Open
    - Middle_Finger: Fully_Open
    - Ring_Finger: Fully_Open
    - Little_Finger: Fully_Open
Left_Hand:
    - Motion_Type: Full_Hand_Grasp 
    - Thumb: Fully_Closed 
    - Index_Finger: Fully_Closed 
    - Middle_Finger: Fully_Closed
    - Ring_Finger: Fully_Closed
    - Little_Finger: Fully_Closed
Object: 
    - Object_Name: Tea Filled Cup
    - Object_Size_wrt_Hand: Size_Of_Palm
    - Position_wrt_Palm: Not_Touching_Palm
    - Contact_with_Thumb: Full_Thumb 
    - Contact_with_Index_Finger: Full_Finger
    - Contact_with_Middle Finger: Full_Finger
    - Contact_with_Ring_Finger: Full_Finger
    - Contact_with_Little_Finger: Full_Finger   
)";

inline constexpr std::string_view kReasoningPreamble =
    "The right hand supports the cup from below with the fingers straight, while the left "
    "hand closes around the handle. Both positions can be held without strain.\n\n";

}  // namespace hoigen::testing
