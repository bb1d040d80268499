//! Streaming generation through the gateway: a normal run, a blocklist
//! halt, a character cap and a timeout.
//!
//! cargo run --example streaming_generation

use std::sync::Arc;
use std::time::{Duration, Instant};

use ipl::gateway::{AllowAll, BlocklistSafety, GenerationGateway, GenerationRequest, ScriptedBackend, StreamLimits};

async fn run(label: &str, gateway: &GenerationGateway, limits: Option<StreamLimits>) {
    let request = GenerationRequest {
        instruction: "Please write a paragraph description for this product.".into(),
        image_ref: "img/1.jpg".into(),
        context: None,
    };
    let mut shown = String::new();
    let outcome = gateway
        .generate(&request, limits, Instant::now(), &mut |chunk| {
            shown.push_str(chunk);
            true
        })
        .await;
    println!(
        "{label:<10} {:?} after {} chunks: {:?} (manual edit: {})",
        outcome.status,
        outcome.chunk_count,
        shown,
        outcome.status.needs_manual_edit()
    );
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chunks = ["Personal used ", "Huawei Mate10pro, ", "add me on wechat ", "for a discount, ", "ships fast."];
    let backend = Arc::new(ScriptedBackend::new(chunks));
    let limits = StreamLimits::default();

    let open = GenerationGateway::new(backend.clone(), Arc::new(AllowAll), limits);
    run("plain", &open, None).await;

    let blocklist = BlocklistSafety::new([r"(?i)wechat"])?;
    let guarded = GenerationGateway::new(backend.clone(), Arc::new(blocklist), limits);
    run("blocklist", &guarded, None).await;

    run(
        "max_chars",
        &open,
        Some(StreamLimits {
            max_chars: 20,
            ..limits
        }),
    )
    .await;

    let slow = Arc::new(ScriptedBackend::new(chunks).with_delay(Duration::from_millis(40)));
    let slow = GenerationGateway::new(slow, Arc::new(AllowAll), limits);
    run(
        "timeout",
        &slow,
        Some(StreamLimits {
            timeout: Duration::from_millis(100),
            ..limits
        }),
    )
    .await;
    Ok(())
}
