//! Every example runs to completion.

macro_rules! example {
    ($module:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $module() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(stft_roundtrip, "stft_roundtrip.rs");
example!(crm_vs_deep_filter, "crm_vs_deep_filter.rs");
example!(oracle_fit, "oracle_fit.rs");
example!(nalr_prescription, "nalr_prescription.rs");
example!(remix_pipeline, "remix_pipeline.rs");
example!(evaluate, "evaluate.rs");
