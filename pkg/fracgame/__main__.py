from fracgame.app import main

main()
