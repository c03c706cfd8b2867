#include "prompts.hpp"

namespace srrg::prompts {

// Structuring prompt; the report text is appended at the end.
const std::string_view kStructuringPrefix = R"srrgprompt(Your task is to improve the formatting of a radiology report, ensuring it is clear, concise, and well-structured with appropriate section headings.

Guidelines:
1. Section Headers: Each section should begin with a section header followed by a colon. Include only the relevant information as specified.
2. Identifiers: Remove any sentences containing identifiers such as dates, surnames, first names, healthcare providers, vendors, or institutions. Important: Retain sex and age information if present.
3. Findings and Impression Sections: Focus exclusively on the current examination results. Do not reference previous studies or historical data.
4. Content Restrictions: Strictly include only content relevant to the structured sections provided. Do not add or extrapolate beyond the original report.

Sections to Include (if applicable):
1. Exam Type: Specify the type of examination conducted.
2. History: Provide a brief clinical history and state the clinical question or suspicion prompting the imaging.
3. Technique: Describe the examination technique and any specific protocols used.
4. Comparison: Indicate prior imaging studies reviewed for comparison.
5. Findings: List all positive and relevant negative observations for each organ system under structured headers.

Template for Findings:
Header 1:
- Observation 1
- ...
Header 2:
- Observation 1
- Observation 2
- ...
...

Use only the following headers for organ systems:
- Lungs and Airways
- Pleura
- Cardiovascular
- Hila and Mediastinum
- Tubes, Catheters, and Support Devices
- Musculoskeletal and Chest Wall
- Abdominal
- Other

Important: Do not use any headers other than those listed above. Only use the specified headers corresponding to the organ systems mentioned in the original radiology report.

6. Impression: Summarize the key findings in a numbered list, ranking them from most to least clinically relevant.

The radiology report to improve is the following:
)srrgprompt";

// Disease prompt, split around the disease list. Findings follow the suffix,
// one per line.
const std::string_view kDiseasePrefix = R"srrgprompt(Your task is to identify the diseases discussed in chest X-ray findings. You will be provided with:
1) Instructions
2) A list of possible diseases
3) A list of chest X-ray findings

1) Instructions:
Your task is to provide the following:
a) The diseases that are present as a numbered list. There can be zero, one, or multiple diseases discussed. If no disease is present or discussed in a finding, answer: "1. No Finding" for that finding.
b) The status of the disease discussed. The status can be:
    - Present: The disease is confirmed to be present in the patient.
    - Absent: The disease is confirmed to be not present in the patient.
    - Uncertain: It is unclear whether the disease is present or absent, often due to inconclusive test results or insufficient information.

Below is the template to provide your answer. You must respect this format and not provide any explanations or additional content:

<finding 1> => 1. <disease 1> (Present) 2. <disease 2> (Uncertain)
<finding 2> => 1. <disease 1> (Absent)
...

2) List of possible diseases:
)srrgprompt";
const std::string_view kDiseaseSuffix = R"srrgprompt(

3) List of chest X-ray findings (one per line):
)srrgprompt";

}  // namespace srrg::prompts
