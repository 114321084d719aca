import { DEFAULT_CONFIG, createApp, type ServerConfig } from "./server.js";

function parseArgs(argv: string[]): { port: number; config: ServerConfig } {
  let port = 8700;
  const config: ServerConfig = { ...DEFAULT_CONFIG };
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case "--port":
        port = Number(argv[++i]);
        break;
      case "--labels":
        config.defaultLabels = argv[++i].split(",").map((s) => s.trim());
        break;
      case "--model-seed":
        config.modelSeed = BigInt(argv[++i]);
        config.modelId = `hash-clip-v1-seed${config.modelSeed}`;
        break;
      default:
        console.error(`unknown argument ${argv[i]}`);
        process.exit(2);
    }
  }
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    console.error(`invalid port ${port}`);
    process.exit(2);
  }
  if (config.defaultLabels.length === 0) {
    console.error("label list must not be empty");
    process.exit(2);
  }
  return { port, config };
}

const { port, config } = parseArgs(process.argv.slice(2));
const server = createApp(config).listen(port, () => {
  const address = server.address();
  const bound = typeof address === "object" && address ? address.port : port;
  console.log(JSON.stringify({ listening: bound, model_id: config.modelId }));
});
