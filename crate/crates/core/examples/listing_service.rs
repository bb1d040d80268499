//! Runs the HTTP service on a local port over a synthetic catalog, streams
//! one listing over SSE, shows the trace, and publishes the draft.
//!
//! cargo run --example listing_service

use std::sync::Arc;

use ipl::gateway::{StreamLimits, TemplateFillBackend};
use ipl::service::{parse_sse, router, ListingPipeline, ListingRequest};
use ipl::synthetic::{generate_world, SyntheticConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let world = generate_world(&SyntheticConfig::default());
    let pipeline = ListingPipeline::from_world(&world, Arc::new(TemplateFillBackend::default()), StreamLimits::default());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(async move { axum::serve(listener, router(Arc::new(pipeline))).await });

    let client = reqwest::Client::new();
    println!("healthz: {}", client.get(format!("{base}/healthz")).send().await?.text().await?);

    let query = &world.queries[0];
    let request = ListingRequest::with_embedding(query.image_ref.clone(), query.embedding.clone());
    let body = client
        .post(format!("{base}/v1/listings:generate"))
        .json(&request)
        .send()
        .await?
        .text()
        .await?;
    let (chunks, trailer) = parse_sse(&body);
    let trailer = trailer.ok_or("stream ended without a trailer")?;
    println!("{} chunks: {}", chunks.len(), chunks.concat());
    println!("status {:?}, variant {:?}", trailer.status, trailer.trace.variant);
    for stage in &trailer.trace.stages {
        println!(
            "  {:<10} {:>7.3} ms  fallback={:<5}  {}",
            format!("{:?}", stage.stage),
            stage.duration_ms,
            stage.fallback_taken,
            stage.outcome
        );
    }
    println!("instruction: {}", trailer.trace.instruction);

    let edited = chunks.concat().replace("all original, ", "");
    let metrics: serde_json::Value = client
        .post(format!("{base}/v1/drafts/{}:publish", trailer.draft_id))
        .json(&serde_json::json!({ "final_text": edited }))
        .send()
        .await?
        .json()
        .await?;
    println!("published: {metrics}");
    let again = client
        .post(format!("{base}/v1/drafts/{}:publish", trailer.draft_id))
        .json(&serde_json::json!({ "final_text": edited }))
        .send()
        .await?;
    println!("second publish: HTTP {}", again.status());
    Ok(())
}
