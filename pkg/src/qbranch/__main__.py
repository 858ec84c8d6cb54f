from qbranch.cli import main

main()
