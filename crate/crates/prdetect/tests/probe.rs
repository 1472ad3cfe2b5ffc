//! Temporary timing probe; not part of the suite.

use std::time::Instant;

use prdetect::channel::{add_awgn_with, transmit_noiseless, Channel};
use prdetect::ldpc::{generate_regular, Encoder};
use prdetect::lp::{lp_detect, LpDetector};
use prdetect::ml::{exhaustive_ml_coded, viterbi_ml};
use prdetect::sim::{derive_seed, random_channel, snr_to_sigma, SnrMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn probe_single_coded_solve() {
    let code = generate_regular(200, 3, 4, 7).unwrap();
    let enc = Encoder::from_matrix(&code);
    let rate = enc.effective_rate();
    let ch = Channel::new(vec![1.0, 0.0, -1.0]).unwrap();
    let sigma = snr_to_sigma(8.0, SnrMode::Ebn0Db, rate).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(9, 0, 0));
    let info: Vec<u8> = (0..enc.info_len()).map(|_| rng.gen_range(0..2)).collect();
    let bits = enc.encode(&info).unwrap();
    let y = transmit_noiseless(&bits, &ch);
    let r = add_awgn_with(&y, sigma, &mut rng);
    let t0 = Instant::now();
    let out = lp_detect(&r, &ch, Some(&code)).unwrap();
    let errs = out.hard_bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
    println!(
        "single pr4 @8dB: {:?}, {} iters, integral={}, biterr={errs}",
        t0.elapsed(),
        out.iterations,
        out.integral
    );
}

#[test]
fn probe_uncoded_block() {
    let sigma = snr_to_sigma(11.0, SnrMode::SnrDb, 1.0).unwrap();
    let ch = random_channel(4, 0);
    let mut det = LpDetector::new(&ch, 100, None).unwrap();
    for trial in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(7, 0, trial));
        let bits: Vec<u8> = (0..100).map(|_| rng.gen_range(0..2)).collect();
        let y = transmit_noiseless(&bits, &ch);
        let r = add_awgn_with(&y, sigma, &mut rng);
        let t0 = Instant::now();
        let out = det.detect(&r).unwrap();
        println!("uncoded trial {trial}: {:?}, {} iters", t0.elapsed(), out.iterations);
    }
}

#[test]
fn probe_correctness_and_timing() {
    // --- coded timing + behavior ---
    let code = generate_regular(200, 3, 4, 7).unwrap();
    let enc = Encoder::from_matrix(&code);
    let rate = enc.effective_rate();

    for (name, taps, ebn0, expect_correct) in [
        ("pr4", vec![1.0, 0.0, -1.0], 8.0, true),
        ("ch2", vec![1.0, 1.0, -1.0, 1.0], 8.0, true),
        ("epr4", vec![1.0, 1.0, -1.0, -1.0], 3.0, false),
    ] {
        let ch = Channel::new(taps).unwrap();
        let sigma = snr_to_sigma(ebn0, SnrMode::Ebn0Db, rate).unwrap();
        let mut det = LpDetector::new(&ch, 200, Some(&code)).unwrap();
        for trial in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(9, 0, trial));
            let info: Vec<u8> = (0..enc.info_len()).map(|_| rng.gen_range(0..2)).collect();
            let bits = enc.encode(&info).unwrap();
            let y = transmit_noiseless(&bits, &ch);
            let r = add_awgn_with(&y, sigma, &mut rng);
            let t0 = Instant::now();
            let out = det.detect(&r).unwrap();
            let errs =
                out.hard_bits.iter().zip(&bits).filter(|(a, b)| a != b).count();
            println!(
                "coded {name} @{ebn0}dB trial {trial}: {:?}, {} iters, integral={}, biterr={errs}",
                t0.elapsed(),
                out.iterations,
                out.integral
            );
            if expect_correct {
                assert!(out.integral && errs == 0, "{name} expected clean decode");
            }
        }
    }

    // --- small coded blocks against exhaustive ML ---
    let ch = Channel::new(vec![1.0, 0.0, -1.0]).unwrap();
    let code = generate_regular(12, 3, 4, 5).unwrap();
    let enc = Encoder::from_matrix(&code);
    let codebook = enc.enumerate_codewords();
    println!("small code: info_len={} words={}", enc.info_len(), codebook.len());
    let mut integral = 0;
    for trial in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let info: Vec<u8> = (0..enc.info_len()).map(|_| rng.gen_range(0..2)).collect();
        let bits = enc.encode(&info).unwrap();
        let y = transmit_noiseless(&bits, &ch);
        let r = add_awgn_with(&y, 0.7, &mut rng);
        let out = lp_detect(&r, &ch, Some(&code)).unwrap();
        if out.integral {
            integral += 1;
            let ml = exhaustive_ml_coded(&r, &ch, &codebook);
            assert_eq!(out.hard_bits, ml, "trial {trial}: integral LP != coded ML");
        }
    }
    println!("small coded: {integral}/60 integral, all matched exhaustive ML");

    // --- uncoded LP vs viterbi, random channels ---
    let mut matches = 0;
    let mut fractional = 0;
    let mut bad = 0;
    for cseed in 0..5u64 {
        let ch = random_channel(3, cseed);
        let mut det = LpDetector::new(&ch, 24, None).unwrap();
        for trial in 0..60 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(40 + cseed, 0, trial));
            let bits: Vec<u8> = (0..24).map(|_| rng.gen_range(0..2)).collect();
            let y = transmit_noiseless(&bits, &ch);
            let r = add_awgn_with(&y, 0.5, &mut rng);
            let out = det.detect(&r).unwrap();
            if !out.integral {
                fractional += 1;
            } else if out.hard_bits == viterbi_ml(&r, &ch) {
                matches += 1;
            } else {
                bad += 1;
            }
        }
    }
    println!("uncoded: match={matches} fractional={fractional} integral-mismatch={bad} /300");
    assert_eq!(bad, 0, "integral LP output must equal the Viterbi ML word");

    // --- uncoded n=100 timing ---
    let sigma = snr_to_sigma(11.0, SnrMode::SnrDb, 1.0).unwrap();
    for cseed in 0..3u64 {
        let ch = random_channel(4, cseed);
        let mut det = LpDetector::new(&ch, 100, None).unwrap();
        let t0 = Instant::now();
        let mut iters = 0usize;
        for trial in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(7, 0, trial));
            let bits: Vec<u8> = (0..100).map(|_| rng.gen_range(0..2)).collect();
            let y = transmit_noiseless(&bits, &ch);
            let r = add_awgn_with(&y, sigma, &mut rng);
            iters += det.detect(&r).unwrap().iterations;
        }
        println!(
            "uncoded n=100 mu=4 chan {cseed}: {:?}/solve, {} iters avg",
            t0.elapsed() / 30,
            iters / 30
        );
    }
}
