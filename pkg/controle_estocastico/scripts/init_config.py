"""
Script para gerar o arquivo de configuração padrão
"""
import sys
from pathlib import Path

# Adiciona o diretório raiz ao path
sys.path.append(str(Path(__file__).parent.parent))

from src.config.experiment import ExperimentConfig, save_config, validate_config


def main(path: str = "config/default.json") -> bool:
    print("🚀 GERANDO CONFIGURAÇÃO PADRÃO")
    print("=" * 60)
    target = Path(path)
    if target.exists():
        print(f"⚠️ Configuração existente encontrada em {target}")
        response = input("Deseja sobrescrever? (s/N): ").lower()
        if response != 's':
            print("Operação cancelada.")
            return False
    config = ExperimentConfig()
    violations = validate_config(config)
    if violations:
        print("❌ Configuração padrão inválida:")
        for violation in violations:
            print(f"  - {violation}")
        return False
    save_config(config, target)
    print(f"✅ Configuração gravada em {target}")
    print(f"\n📊 Resumo:")
    print(f"  📏 Malha: N = {config.mesh.N}, árvore com profundidade {config.tree.depth}, T = {config.tree.T}")
    print(f"  🎯 ω = {config.region.omega}, ω₀ = {config.region.omega0}")
    print(f"  🔁 Varredura: N ∈ {list(config.sweep.N_values)}")
    print(f"\n🎉 Pronto! Execute 'python main.py identities --config {target}' para começar.")
    return True


if __name__ == "__main__":
    main(*sys.argv[1:2])
