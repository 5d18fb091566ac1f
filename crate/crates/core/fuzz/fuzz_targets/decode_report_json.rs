#![no_main]

use libfuzzer_sys::fuzz_target;
use sampdens::cli::VerificationArtifact;
use sampdens::densities::DensityReport;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = DensityReport::from_json(text) {
        // Decoded reports re-encode to something that decodes again.
        let json = report.to_json();
        DensityReport::from_json(&json).expect("encoded report decodes");
    }
    let _ = VerificationArtifact::from_json(text);
});
